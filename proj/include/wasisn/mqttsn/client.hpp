#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wasisn/common/clock.hpp"
#include "wasisn/mqttsn/codec.hpp"
#include "wasisn/net/transport.hpp"

namespace wasisn::mqttsn {

struct ClientConfig {
  uint16_t keepAliveSeconds = 30;
  Nanos ackWait = seconds(10);
  int transmissions = 3;          // total sends per message, first included
  size_t inboundQueueLimit = 64;  // per-topic FIFO bound, oldest dropped
};

enum class ClientMode { Disconnected, Active, Asleep };

/// Things tick() did, reported for tests and logs.
struct TickAction {
  enum class Kind { Retransmit, KeepAlivePing, OpTimeout };
  Kind kind;
  MsgType msgType;
  uint16_t msgId;
};

/// MQTT-SN v1.2 client. The core is a single-owner state machine mutated by
/// the operation calls, onDatagram() and tick(); the operation calls block by
/// pumping the transport, which under the simulated network advances
/// simulated time deterministically.
class Client {
 public:
  Client(net::Transport& transport, Clock& clock, ClientConfig cfg = {})
      : transport_(transport), clock_(clock), cfg_(cfg) {}

  ClientMode mode() const { return mode_; }
  bool started() const { return started_; }
  const std::string& clientId() const { return clientId_; }
  uint16_t localPort() const { return localPort_; }
  const net::Address& gatewayAddress() const { return gateway_; }

  // -- lifecycle ----------------------------------------------------------

  Result<uint16_t> start(uint16_t port) {
    if (started_) return Errc::AlreadyStarted;
    auto bound = transport_.bind(port);
    if (!bound) return bound.error();
    localPort_ = bound.value();
    started_ = true;
    mode_ = ClientMode::Disconnected;
    return localPort_;
  }

  Result<void> stop() {
    transport_.close();
    started_ = false;
    mode_ = ClientMode::Disconnected;
    pending_.clear();
    completions_.clear();
    nameToId_.clear();
    idToName_.clear();
    queues_.clear();
    subscriptions_.clear();
    qos2Inbound_.clear();
    return {};
  }

  Result<void> disconnect() {
    if (!started_) return {};
    if (mode_ != ClientMode::Disconnected) {
      sendMessage(gateway_, Disconnect{});
    }
    mode_ = ClientMode::Disconnected;
    pending_.clear();
    return {};
  }

  // -- gateway discovery and session --------------------------------------

  Result<net::Address> searchGw(const net::Address& broadcast, uint8_t maxHops) {
    if (!started_) return Errc::NotConnected;
    const uint64_t op = beginOp();
    track(op, PendKind::SearchGw, 0, broadcast, Message{SearchGw{maxHops}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    return done.value().address;
  }

  Result<void> connect(const std::string& clientId, uint16_t keepAliveSeconds,
                       const net::Address& gateway) {
    if (!started_) return Errc::NotConnected;
    if (mode_ != ClientMode::Disconnected) return Errc::AlreadyStarted;
    clientId_ = clientId;
    keepAlive_ = keepAliveSeconds;
    gateway_ = gateway;
    const uint64_t op = beginOp();
    track(op, PendKind::Connect, 0, gateway_,
          Message{Connect{flags::kCleanSession, keepAliveSeconds, clientId}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    mode_ = ClientMode::Active;
    return {};
  }

  // -- topics --------------------------------------------------------------

  Result<uint16_t> registerTopic(const std::string& topicName) {
    if (auto r = requireActive(); !r) return r.error();
    if (topicName.empty() || topicName.size() > 250) return Errc::BadEncoding;
    const uint16_t msgId = nextMsgId();
    const uint64_t op = beginOp();
    track(op, PendKind::Register, msgId, gateway_, Message{Register{0, msgId, topicName}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    mapTopic(topicName, done.value().topicId);
    return done.value().topicId;
  }

  Result<void> publish(uint16_t topicId, uint8_t qos, std::span<const uint8_t> payload) {
    if (auto r = requireActive(); !r) return r.error();
    if (!idToName_.count(topicId)) return Errc::UnknownTopicId;
    if (qos == 0) {
      sendMessage(gateway_, Publish{flags::qos(0), topicId, 0,
                                    Bytes(payload.begin(), payload.end())});
      return {};
    }
    const uint16_t msgId = nextMsgId();
    const uint64_t op = beginOp();
    const auto kind = qos == 1 ? PendKind::PublishAck : PendKind::PublishRec;
    track(op, kind, msgId, gateway_,
          Message{Publish{flags::qos(qos), topicId, msgId, Bytes(payload.begin(), payload.end())}},
          /*dupOnResend=*/true);
    auto done = awaitOp(op);
    if (!done) return done.error();
    return {};
  }

  Result<uint16_t> subscribe(const std::string& topicName, uint8_t qos) {
    return subscribeRef(TopicRef::byName(topicName), qos);
  }
  Result<uint16_t> subscribe(uint16_t topicId, uint8_t qos) {
    return subscribeRef(TopicRef::byId(topicId), qos);
  }

  Result<void> unsubscribe(const std::string& topicName) {
    if (auto r = requireActive(); !r) return r.error();
    const uint16_t msgId = nextMsgId();
    const uint64_t op = beginOp();
    track(op, PendKind::Unsubscribe, msgId, gateway_,
          Message{Unsubscribe{0, msgId, TopicRef::byName(topicName)}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    std::erase_if(subscriptions_, [&](const Subscription& s) {
      return s.filter.name && *s.filter.name == topicName;
    });
    return {};
  }

  // -- inbound queue access -------------------------------------------------

  Result<bool> hasMessage(uint16_t topicId) const {
    auto it = queues_.find(topicId);
    if (it != queues_.end()) return !it->second.empty();
    if (!coversId(topicId)) return Errc::NoSuchSubscription;
    return false;
  }

  Result<Bytes> getMessage(uint16_t topicId) {
    auto it = queues_.find(topicId);
    if (it == queues_.end()) {
      if (!coversId(topicId)) return Errc::NoSuchSubscription;
      return Errc::Empty;
    }
    if (it->second.empty()) return Errc::Empty;
    Bytes out = std::move(it->second.front());
    it->second.pop_front();
    return out;
  }

  /// Non-destructive peek across all queues; convenience for host agents
  /// multiplexing a wildcard subscription (not part of the guest ABI).
  std::optional<uint16_t> anyPendingTopic() const {
    for (const auto& [id, q] : queues_)
      if (!q.empty()) return id;
    return std::nullopt;
  }

  /// Resolves a topic id learned via REGISTER/REGACK back to its name.
  std::optional<std::string> topicName(uint16_t id) const {
    auto it = idToName_.find(id);
    if (it == idToName_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<uint16_t> topicId(const std::string& name) const {
    auto it = nameToId_.find(name);
    if (it == nameToId_.end()) return std::nullopt;
    return it->second;
  }

  // -- sleep ----------------------------------------------------------------

  Result<void> sleep(std::optional<uint16_t> durationSeconds) {
    if (auto r = requireActive(); !r) return r.error();
    const uint64_t op = beginOp();
    // Duration 0 encodes "sleep until awake() with no gateway deadline".
    track(op, PendKind::SleepDisconnect, 0, gateway_,
          Message{Disconnect{durationSeconds.value_or(0)}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    mode_ = ClientMode::Asleep;
    return {};
  }

  Result<void> awake() {
    if (!started_ || mode_ != ClientMode::Asleep) return Errc::NotConnected;
    const uint64_t op = beginOp();
    track(op, PendKind::AwakePing, 0, gateway_, Message{Pingreq{clientId_}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    mode_ = ClientMode::Active;
    return {};
  }

  // -- driving --------------------------------------------------------------

  /// Drains the transport and runs timers once; used by agent loops between
  /// blocking calls.
  void service() {
    drainInbound();
    tick(clock_.now());
  }

  /// Retransmits expired in-flight messages, fails exhausted operations and
  /// emits the keep-alive ping. Pure function of state and the passed clock
  /// reading; safe to call at any frequency.
  std::vector<TickAction> tick(Nanos now) {
    std::vector<TickAction> actions;
    for (auto it = pending_.begin(); it != pending_.end();) {
      Pending& p = *it;
      if (p.deadline > now) {
        ++it;
        continue;
      }
      if (p.retriesLeft > 0) {
        resend(p);
        actions.push_back({TickAction::Kind::Retransmit, typeOf(p.msg), p.msgId});
        ++it;
        continue;
      }
      actions.push_back({TickAction::Kind::OpTimeout, typeOf(p.msg), p.msgId});
      complete(p.opId, Errc::Timeout);
      it = pending_.erase(it);
    }
    if (mode_ == ClientMode::Active && keepAlive_ > 0 &&
        now - lastTransmit_ >= seconds(keepAlive_)) {
      sendMessage(gateway_, Pingreq{});
      actions.push_back({TickAction::Kind::KeepAlivePing, MsgType::Pingreq, 0});
    }
    return actions;
  }

  void onDatagram(const net::Datagram& d) {
    auto decoded = decode(d.data);
    if (!decoded) return;  // garbage on the wire is dropped silently
    handle(d.from, decoded.value());
  }

  size_t pendingAckCount() const { return pending_.size(); }

 private:
  enum class PendKind {
    SearchGw,
    Connect,
    Register,
    PublishAck,   // QoS 1, waiting for PUBACK
    PublishRec,   // QoS 2, waiting for PUBREC
    PublishComp,  // QoS 2, PUBREL sent, waiting for PUBCOMP
    Subscribe,
    Unsubscribe,
    SleepDisconnect,
    AwakePing,
  };

  struct Pending {
    uint64_t opId;
    PendKind kind;
    uint16_t msgId;
    net::Address to;
    Message msg;
    bool dupOnResend;
    Nanos deadline;
    int retriesLeft;
  };

  struct OpOutcome {
    Errc err = Errc::Ok;
    uint16_t topicId = 0;
    net::Address address;
  };

  struct Subscription {
    TopicRef filter;
    uint8_t qos;
    uint16_t grantedId;  // 0 for wildcard filters
  };

  Result<void> requireActive() const {
    if (!started_ || mode_ != ClientMode::Active) return Errc::NotConnected;
    return {};
  }

  Result<uint16_t> subscribeRef(TopicRef topic, uint8_t qos) {
    if (auto r = requireActive(); !r) return r.error();
    const uint16_t msgId = nextMsgId();
    const uint64_t op = beginOp();
    track(op, PendKind::Subscribe, msgId, gateway_,
          Message{Subscribe{flags::qos(qos), msgId, topic}});
    auto done = awaitOp(op);
    if (!done) return done.error();
    const uint16_t granted = done.value().topicId;
    if (topic.name && granted != 0) mapTopic(*topic.name, granted);
    subscriptions_.push_back({std::move(topic), qos, granted});
    if (granted != 0) queues_.try_emplace(granted);
    return granted;
  }

  uint64_t beginOp() { return nextOpId_++; }

  uint16_t nextMsgId() {
    if (msgIdCounter_ == 0) msgIdCounter_ = 1;  // 0 is reserved
    return msgIdCounter_++;
  }

  void mapTopic(const std::string& name, uint16_t id) {
    if (auto it = idToName_.find(id); it != idToName_.end()) nameToId_.erase(it->second);
    if (auto it = nameToId_.find(name); it != nameToId_.end()) idToName_.erase(it->second);
    nameToId_[name] = id;
    idToName_[id] = name;
  }

  bool coversId(uint16_t id) const {
    for (const auto& s : subscriptions_) {
      if (s.grantedId == id) return true;
      if (s.filter.name) {
        auto it = idToName_.find(id);
        if (it == idToName_.end()) continue;
        if (topicFilterMatches(*s.filter.name, it->second)) return true;
      } else if (s.filter.id == id) {
        return true;
      }
    }
    return false;
  }

  void sendMessage(const net::Address& to, const Message& m) {
    transport_.send(to, encode(m));
    lastTransmit_ = clock_.now();
  }

  void track(uint64_t opId, PendKind kind, uint16_t msgId, const net::Address& to, Message msg,
             bool dupOnResend = false) {
    Pending p{opId, kind, msgId, to, std::move(msg), dupOnResend, 0, cfg_.transmissions};
    transmit(p);
    pending_.push_back(std::move(p));
  }

  void transmit(Pending& p) {
    sendMessage(p.to, p.msg);
    p.retriesLeft--;
    p.deadline = clock_.now() + cfg_.ackWait;
  }

  void resend(Pending& p) {
    if (p.dupOnResend) {
      if (auto* pub = std::get_if<Publish>(&p.msg)) pub->msgFlags |= flags::kDup;
    }
    transmit(p);
  }

  void complete(uint64_t opId, Errc err, uint16_t topicId = 0, net::Address addr = {}) {
    completions_[opId] = OpOutcome{err, topicId, std::move(addr)};
  }

  static constexpr Nanos kNever = INT64_MAX;

  Nanos nextWakeTime() const {
    Nanos next = kNever;
    for (const auto& p : pending_) next = std::min(next, p.deadline);
    if (mode_ == ClientMode::Active && keepAlive_ > 0)
      next = std::min(next, lastTransmit_ + seconds(keepAlive_));
    return next;
  }

  void drainInbound() {
    while (auto d = transport_.receive()) onDatagram(*d);
  }

  Result<OpOutcome> awaitOp(uint64_t opId) {
    for (;;) {
      drainInbound();
      if (auto done = takeCompletion(opId)) {
        if (done->err != Errc::Ok) return done->err;
        return *done;
      }
      tick(clock_.now());
      if (auto done = takeCompletion(opId)) {
        if (done->err != Errc::Ok) return done->err;
        return *done;
      }
      Nanos wake = nextWakeTime();
      if (wake == kNever) wake = clock_.now() + cfg_.ackWait;
      transport_.waitUntil(wake);
    }
  }

  std::optional<OpOutcome> takeCompletion(uint64_t opId) {
    auto it = completions_.find(opId);
    if (it == completions_.end()) return std::nullopt;
    OpOutcome out = std::move(it->second);
    completions_.erase(it);
    return out;
  }

  /// Erases the first pending entry matching pred and returns it.
  std::optional<Pending> takePending(PendKind kind, uint16_t msgId) {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      if (it->kind == kind && it->msgId == msgId) {
        Pending p = std::move(*it);
        pending_.erase(it);
        return p;
      }
    }
    return std::nullopt;
  }

  void enqueueInbound(uint16_t topicId, Bytes payload) {
    auto& q = queues_[topicId];
    if (q.size() >= cfg_.inboundQueueLimit) q.pop_front();  // oldest-drop
    q.push_back(std::move(payload));
  }

  void handle(const net::Address& from, const Message& msg) {
    switch (typeOf(msg)) {
      case MsgType::GwInfo: {
        if (auto p = takePending(PendKind::SearchGw, 0))
          complete(p->opId, Errc::Ok, 0, from);
        break;
      }
      case MsgType::Connack: {
        const auto& m = std::get<Connack>(msg);
        if (auto p = takePending(PendKind::Connect, 0))
          complete(p->opId, m.code == ReturnCode::Accepted ? Errc::Ok : Errc::Refused);
        break;
      }
      case MsgType::Regack: {
        const auto& m = std::get<Regack>(msg);
        if (auto p = takePending(PendKind::Register, m.msgId)) {
          if (m.code == ReturnCode::Accepted)
            complete(p->opId, Errc::Ok, m.topicId);
          else
            complete(p->opId, Errc::Refused);
        }
        break;
      }
      case MsgType::Puback: {
        const auto& m = std::get<Puback>(msg);
        if (auto p = takePending(PendKind::PublishAck, m.msgId))
          complete(p->opId, m.code == ReturnCode::Accepted ? Errc::Ok : Errc::UnknownTopicId);
        break;
      }
      case MsgType::Pubrec: {
        const auto& m = std::get<Pubrec>(msg);
        if (auto p = takePending(PendKind::PublishRec, m.msgId)) {
          track(p->opId, PendKind::PublishComp, m.msgId, p->to, Message{Pubrel{m.msgId}});
        } else {
          // Duplicate PUBREC for a PUBREL already in flight: answer again.
          for (auto& q : pending_)
            if (q.kind == PendKind::PublishComp && q.msgId == m.msgId)
              sendMessage(q.to, q.msg);
        }
        break;
      }
      case MsgType::Pubcomp: {
        const auto& m = std::get<Pubcomp>(msg);
        if (auto p = takePending(PendKind::PublishComp, m.msgId)) complete(p->opId, Errc::Ok);
        break;
      }
      case MsgType::Suback: {
        const auto& m = std::get<Suback>(msg);
        if (auto p = takePending(PendKind::Subscribe, m.msgId)) {
          if (m.code == ReturnCode::Accepted)
            complete(p->opId, Errc::Ok, m.topicId);
          else
            complete(p->opId, Errc::Refused);
        }
        break;
      }
      case MsgType::Unsuback: {
        const auto& m = std::get<Unsuback>(msg);
        if (auto p = takePending(PendKind::Unsubscribe, m.msgId)) complete(p->opId, Errc::Ok);
        break;
      }
      case MsgType::Register: {
        // Gateway announces the id for a wildcard-matched topic.
        const auto& m = std::get<Register>(msg);
        mapTopic(m.topicName, m.topicId);
        queues_.try_emplace(m.topicId);
        sendMessage(from, Regack{m.topicId, m.msgId, ReturnCode::Accepted});
        break;
      }
      case MsgType::Publish: {
        const auto& m = std::get<Publish>(msg);
        const uint8_t qos = flags::qosOf(m.msgFlags);
        const bool known = queues_.count(m.topicId) || coversId(m.topicId);
        if (!known) {
          if (qos >= 1)
            sendMessage(from, Puback{m.topicId, m.msgId, ReturnCode::RejectedInvalidTopicId});
          break;
        }
        if (qos == 0) {
          enqueueInbound(m.topicId, m.data);
        } else if (qos == 1) {
          enqueueInbound(m.topicId, m.data);
          sendMessage(from, Puback{m.topicId, m.msgId, ReturnCode::Accepted});
        } else {
          // Exactly-once: hold until PUBREL, dedup on msgId.
          auto [it, fresh] = qos2Inbound_.try_emplace(m.msgId, Qos2In{m.topicId, m.data, false});
          if (!fresh && it->second.released) {
            // msgId reused for a new message after a completed exchange
            it->second = Qos2In{m.topicId, m.data, false};
          }
          sendMessage(from, Pubrec{m.msgId});
        }
        break;
      }
      case MsgType::Pubrel: {
        const auto& m = std::get<Pubrel>(msg);
        auto it = qos2Inbound_.find(m.msgId);
        if (it != qos2Inbound_.end() && !it->second.released) {
          enqueueInbound(it->second.topicId, std::move(it->second.data));
          it->second.released = true;
          it->second.data.clear();
        }
        sendMessage(from, Pubcomp{m.msgId});
        break;
      }
      case MsgType::Pingresp: {
        if (auto p = takePending(PendKind::AwakePing, 0)) complete(p->opId, Errc::Ok);
        break;
      }
      case MsgType::Pingreq: {
        sendMessage(from, Pingresp{});
        break;
      }
      case MsgType::Disconnect: {
        if (auto p = takePending(PendKind::SleepDisconnect, 0)) {
          complete(p->opId, Errc::Ok);
        } else if (mode_ != ClientMode::Disconnected) {
          mode_ = ClientMode::Disconnected;  // gateway closed the session
          pending_.clear();
        }
        break;
      }
      default:
        break;  // ADVERTISE and friends carry no client state
    }
  }

  struct Qos2In {
    uint16_t topicId;
    Bytes data;
    bool released;
  };

  net::Transport& transport_;
  Clock& clock_;
  ClientConfig cfg_;

  bool started_ = false;
  ClientMode mode_ = ClientMode::Disconnected;
  uint16_t localPort_ = 0;
  std::string clientId_;
  uint16_t keepAlive_ = 0;
  net::Address gateway_;
  Nanos lastTransmit_ = 0;

  uint16_t msgIdCounter_ = 1;
  uint64_t nextOpId_ = 1;
  std::vector<Pending> pending_;
  std::map<uint64_t, OpOutcome> completions_;

  std::map<std::string, uint16_t> nameToId_;
  std::map<uint16_t, std::string> idToName_;
  std::vector<Subscription> subscriptions_;
  std::map<uint16_t, std::deque<Bytes>> queues_;
  std::map<uint16_t, Qos2In> qos2Inbound_;
};

}  // namespace wasisn::mqttsn
