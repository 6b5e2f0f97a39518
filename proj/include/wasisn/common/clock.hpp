#pragma once

#include <chrono>
#include <cstdint>

namespace wasisn {

/// Monotonic nanoseconds. All protocol deadlines, sensor timestamps and
/// benchmark timings are expressed in this unit.
using Nanos = int64_t;

constexpr Nanos kNanosPerSecond = 1'000'000'000;

constexpr Nanos seconds(int64_t s) { return s * kNanosPerSecond; }
constexpr Nanos milliseconds(int64_t ms) { return ms * 1'000'000; }
constexpr Nanos microseconds(int64_t us) { return us * 1'000; }

/// Time source abstraction. The simulated clock is advanced explicitly by the
/// network kernel and cost models; the system clock ignores advance() so the
/// same code paths run in wall-clock mode.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Nanos now() const = 0;
  virtual void advance(Nanos delta) = 0;
};

class SimClock final : public Clock {
 public:
  explicit SimClock(Nanos start = 0) : now_(start) {}

  Nanos now() const override { return now_; }
  void advance(Nanos delta) override {
    if (delta > 0) now_ += delta;
  }
  void advanceTo(Nanos t) {
    if (t > now_) now_ = t;
  }

 private:
  Nanos now_;
};

class SystemClock final : public Clock {
 public:
  Nanos now() const override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
  void advance(Nanos) override {}  // real time cannot be pushed
};

}  // namespace wasisn
