#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <vector>

#include "wasisn/common/clock.hpp"
#include "wasisn/common/rng.hpp"
#include "wasisn/net/transport.hpp"

namespace wasisn::net {

/// Packet-level fault model applied to every transmission.
struct FaultSpec {
  double loss = 0.0;      // drop probability per (receiver, datagram)
  Nanos latency = 0;      // fixed one-way delay
  Nanos jitter = 0;       // extra delay, uniform in [0, jitter]
};

class SimTransport;

/// Deterministic in-process datagram network. Owns the event queue that
/// drives the simulated clock: sends become delivery events, reactor
/// components schedule timer events, and advancing time pops events in
/// (time, sequence) order so every run with the same seed is identical.
class SimNet {
 public:
  SimNet(SimClock& clock, uint64_t seed, FaultSpec faults = {})
      : clock_(clock), rng_(seed), faults_(faults) {}

  SimClock& clock() { return clock_; }
  const FaultSpec& faults() const { return faults_; }
  void setFaults(FaultSpec f) { faults_ = f; }

  /// Observer of every send attempt (before loss is applied).
  using Tap = std::function<void(const Address& from, const Address& to,
                                 std::span<const uint8_t> data)>;
  void setTap(Tap tap) { tap_ = std::move(tap); }

  /// Scripted drop hook; returning true drops the datagram regardless of the
  /// probabilistic loss setting. Used by tests to kill specific handshakes.
  using DropFn = std::function<bool(const Address& from, const Address& to,
                                    std::span<const uint8_t> data)>;
  void setDropFn(DropFn fn) { dropFn_ = std::move(fn); }

  std::unique_ptr<SimTransport> createTransport(std::string host);

  /// Schedules an arbitrary callback (reactor timers).
  void schedule(Nanos at, std::function<void()> fn) {
    events_.push(Event{at, nextSeq_++, EventKind::Timer, {}, {}, std::move(fn)});
  }

  Nanos nextEventTime() const {
    return events_.empty() ? kNoEvent : events_.top().at;
  }
  static constexpr Nanos kNoEvent = INT64_MAX;

  /// Pops and dispatches every event with time <= deadline, advancing the
  /// clock to each event time; finally advances the clock to `deadline` if it
  /// is a finite target. Stops early when `until` returns true.
  void advanceUntil(Nanos deadline, const std::function<bool()>& until = {});

  /// Runs until the event queue drains (or `until` fires).
  void run(const std::function<bool()>& until = {}) {
    while (!events_.empty() && (!until || !until())) step();
  }

  bool step();  // dispatches the single earliest event; false when idle

  struct Counters {
    uint64_t sent = 0;
    uint64_t dropped = 0;
    uint64_t delivered = 0;
  };
  const Counters& counters() const { return counters_; }

 private:
  friend class SimTransport;

  enum class EventKind { Delivery, Timer };
  struct Event {
    Nanos at;
    uint64_t seq;
    EventKind kind;
    Address to;
    Datagram datagram;
    std::function<void()> timer;

    bool operator>(const Event& o) const {
      return at != o.at ? at > o.at : seq > o.seq;
    }
  };

  void sendFrom(const Address& from, const Address& to, std::span<const uint8_t> data);
  void enqueueDelivery(const Address& from, const Address& to, std::span<const uint8_t> data);
  void deliver(const Address& to, Datagram&& d);

  SimClock& clock_;
  Rng rng_;
  FaultSpec faults_;
  Tap tap_;
  DropFn dropFn_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  uint64_t nextSeq_ = 0;
  std::map<Address, SimTransport*> endpoints_;
  std::map<std::string, uint16_t> nextEphemeral_;
  Counters counters_;
};

class SimTransport final : public Transport {
 public:
  SimTransport(SimNet& net, std::string host) : net_(net), host_(std::move(host)) {}
  ~SimTransport() override { close(); }

  SimTransport(const SimTransport&) = delete;
  SimTransport& operator=(const SimTransport&) = delete;

  Result<uint16_t> bind(uint16_t port) override {
    if (bound_) return Errc::AlreadyStarted;
    if (port == 0) {
      auto& next = net_.nextEphemeral_[host_];
      if (next < 40000) next = 40000;
      while (net_.endpoints_.count({host_, next})) ++next;
      port = next++;
    } else if (net_.endpoints_.count({host_, port})) {
      return Errc::BindError;
    }
    address_ = {host_, port};
    net_.endpoints_[address_] = this;
    bound_ = true;
    return port;
  }

  void close() override {
    if (bound_) {
      net_.endpoints_.erase(address_);
      bound_ = false;
      inbox_.clear();
    }
  }

  bool bound() const override { return bound_; }
  Address localAddress() const override { return address_; }

  void send(const Address& to, std::span<const uint8_t> data) override {
    net_.sendFrom(address_, to, data);
  }

  std::optional<Datagram> receive() override {
    if (handler_ || inbox_.empty()) return std::nullopt;
    Datagram d = std::move(inbox_.front());
    inbox_.pop_front();
    return d;
  }

  bool waitUntil(Nanos deadline) override {
    net_.advanceUntil(deadline, [this] { return !inbox_.empty(); });
    return !inbox_.empty();
  }

  Address broadcastAddress() const override { return {"*", 0}; }

  /// Reactor mode: deliveries invoke `fn` inline instead of queueing.
  using Handler = std::function<void(const Datagram&)>;
  void setHandler(Handler fn) { handler_ = std::move(fn); }

 private:
  friend class SimNet;

  void accept(Datagram&& d) {
    if (handler_) {
      handler_(d);
    } else {
      inbox_.push_back(std::move(d));
    }
  }

  SimNet& net_;
  std::string host_;
  Address address_;
  bool bound_ = false;
  std::deque<Datagram> inbox_;
  Handler handler_;
};

inline std::unique_ptr<SimTransport> SimNet::createTransport(std::string host) {
  return std::make_unique<SimTransport>(*this, std::move(host));
}

inline void SimNet::sendFrom(const Address& from, const Address& to,
                             std::span<const uint8_t> data) {
  counters_.sent++;
  if (tap_) tap_(from, to, data);
  if (to.host == "*") {
    // Broadcast reaches every bound endpoint except the sender, each with an
    // independent loss draw.
    std::vector<Address> targets;
    for (auto& [addr, ep] : endpoints_) {
      if (addr != from && (to.port == 0 || addr.port == to.port)) targets.push_back(addr);
    }
    for (const auto& t : targets) enqueueDelivery(from, t, data);
    return;
  }
  enqueueDelivery(from, to, data);
}

inline void SimNet::enqueueDelivery(const Address& from, const Address& to,
                                    std::span<const uint8_t> data) {
  if (dropFn_ && dropFn_(from, to, data)) {
    counters_.dropped++;
    return;
  }
  if (rng_.chance(faults_.loss)) {
    counters_.dropped++;
    return;
  }
  Nanos delay = faults_.latency;
  if (faults_.jitter > 0) delay += static_cast<Nanos>(rng_.below(static_cast<uint64_t>(faults_.jitter) + 1));
  Event ev{clock_.now() + delay, nextSeq_++, EventKind::Delivery, to,
           Datagram{from, Bytes(data.begin(), data.end())}, {}};
  events_.push(std::move(ev));
}

inline void SimNet::deliver(const Address& to, Datagram&& d) {
  auto it = endpoints_.find(to);
  if (it == endpoints_.end()) return;  // nobody listening; datagram vanishes
  counters_.delivered++;
  it->second->accept(std::move(d));
}

inline bool SimNet::step() {
  if (events_.empty()) return false;
  Event ev = events_.top();
  events_.pop();
  clock_.advanceTo(ev.at);
  if (ev.kind == EventKind::Delivery) {
    deliver(ev.to, std::move(ev.datagram));
  } else {
    ev.timer();
  }
  return true;
}

inline void SimNet::advanceUntil(Nanos deadline, const std::function<bool()>& until) {
  while (!(until && until())) {
    const Nanos next = nextEventTime();
    if (next == kNoEvent || next > deadline) break;
    step();
  }
  if (!(until && until()) && deadline != kNoEvent) clock_.advanceTo(deadline);
}

}  // namespace wasisn::net
