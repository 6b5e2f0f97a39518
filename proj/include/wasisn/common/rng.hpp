#pragma once

#include <cstdint>
#include <random>

namespace wasisn {

/// Deterministic RNG used everywhere randomness is needed (crypto sampling on
/// the mock backend, virtual sensor walks, network fault injection). A thin
/// wrapper over mt19937_64 whose raw output is specified by the standard, so
/// sequences are reproducible across toolchains; uniformity is done by
/// rejection here instead of std::uniform_int_distribution, which is not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  /// Uniform in [0, bound). bound must be nonzero.
  uint64_t below(uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  /// Uniform in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  /// Bernoulli with probability p (clamped to [0,1]).
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return static_cast<double>(engine_()) / static_cast<double>(UINT64_MAX) < p;
  }

  /// Derive an independent child stream; handy for giving each component its
  /// own sequence from one scenario seed.
  Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wasisn
