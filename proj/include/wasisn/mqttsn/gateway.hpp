#pragma once

#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wasisn/common/clock.hpp"
#include "wasisn/mqttsn/client.hpp"
#include "wasisn/mqttsn/codec.hpp"
#include "wasisn/net/transport.hpp"

namespace wasisn::mqttsn {

struct GatewayConfig {
  uint8_t gatewayId = 1;
  Nanos ackWait = seconds(10);
  int transmissions = 3;
  Nanos sleepGrace = seconds(10);  // slack past the announced sleep duration
  size_t sleepBufferLimit = 1024;
};

/// Bijective topic-name <-> topic-id registry. Ids are allocated
/// sequentially from 1; id 0 is never assigned.
class TopicRegistry {
 public:
  Result<uint16_t> assign(const std::string& name) {
    if (name.empty() || name.find('+') != std::string::npos ||
        name.find('#') != std::string::npos)
      return Errc::WildcardInName;
    if (auto it = nameToId_.find(name); it != nameToId_.end()) return it->second;
    if (nameToId_.size() >= 0xfffe) return Errc::RegistryFull;
    while (idToName_.count(nextId_) || nextId_ == 0) ++nextId_;
    const uint16_t id = nextId_++;
    nameToId_[name] = id;
    idToName_[id] = name;
    return id;
  }

  std::optional<std::string> name(uint16_t id) const {
    auto it = idToName_.find(id);
    if (it == idToName_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<uint16_t> id(const std::string& name) const {
    auto it = nameToId_.find(name);
    if (it == nameToId_.end()) return std::nullopt;
    return it->second;
  }
  size_t size() const { return nameToId_.size(); }

 private:
  std::map<std::string, uint16_t> nameToId_;
  std::map<uint16_t, std::string> idToName_;
  uint16_t nextId_ = 1;
};

enum class SessionMode { Active, Asleep, Lost, Disconnected };

/// Combined MQTT-SN gateway and broker. Single reactor: one datagram (or
/// timer) is processed at a time, so session and registry state need no
/// locking and runs are deterministic under the simulated network.
class Gateway {
 public:
  Gateway(net::Transport& transport, Clock& clock, GatewayConfig cfg = {})
      : transport_(transport), clock_(clock), cfg_(cfg) {}

  Result<uint16_t> start(uint16_t port) {
    auto bound = transport_.bind(port);
    if (!bound) return bound.error();
    return bound.value();
  }

  /// Called whenever the earliest internal deadline may have changed; the
  /// harness wires this to the simulation kernel (or a poll loop) so tick()
  /// runs on time.
  void setWaker(std::function<void(Nanos)> waker) { waker_ = std::move(waker); }

  void onDatagram(const net::Datagram& d) {
    auto decoded = decode(d.data);
    if (!decoded) {
      logf("drop malformed from=" + d.from.str());
      return;
    }
    handle(d.from, decoded.value());
    armWaker();
  }

  void tick(Nanos now) {
    // retransmit or expire gateway-originated reliable sends
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (it->deadline > now) {
        ++it;
        continue;
      }
      if (it->retriesLeft > 0) {
        resend(*it);
        ++it;
        continue;
      }
      logf("give-up kind=" + std::to_string(static_cast<int>(it->kind)) +
           " to=" + it->to.str());
      it = pending_.erase(it);
    }
    // overdue sleepers lose their session and buffer
    for (auto& [addr, s] : sessions_) {
      if (s.mode == SessionMode::Asleep && s.sleepDeadline != 0 && now >= s.sleepDeadline) {
        s.mode = SessionMode::Lost;
        logf("session-lost client=" + s.clientId + " dropped=" + std::to_string(s.buffered.size()));
        s.buffered.clear();
      }
    }
    armWaker();
  }

  Nanos nextDeadline() const {
    Nanos next = kNever;
    for (const auto& p : pending_) next = std::min(next, p.deadline);
    for (const auto& [addr, s] : sessions_)
      if (s.mode == SessionMode::Asleep && s.sleepDeadline != 0)
        next = std::min(next, s.sleepDeadline);
    return next;
  }

  Result<uint16_t> assignTopicId(const std::string& name) { return registry_.assign(name); }

  const TopicRegistry& registry() const { return registry_; }

  struct Session {
    std::string clientId;
    SessionMode mode = SessionMode::Active;
    uint16_t keepAliveSeconds = 0;
    Nanos sleepDeadline = 0;  // 0 = none
    Nanos lastSeen = 0;
    std::vector<std::pair<TopicRef, uint8_t>> subscriptions;  // filter, qos
    std::set<uint16_t> knownIds;
    uint16_t msgIdCounter = 1;

    struct Buffered {
      uint16_t topicId;
      uint8_t qos;
      Bytes data;
    };
    std::deque<Buffered> buffered;

    struct Qos2In {
      uint16_t topicId;
      uint8_t qos;  // publish qos as sent (always 2); kept for routing flags
      Bytes data;
      bool released;
    };
    std::map<uint16_t, Qos2In> qos2Inbound;
  };

  const std::map<net::Address, Session>& sessions() const { return sessions_; }

  /// One line per routed message plus lifecycle events; tests assert on it.
  const std::vector<std::string>& log() const { return log_; }

  struct Stats {
    uint64_t routed = 0;
    uint64_t buffered = 0;
    uint64_t rejected = 0;
  };
  const Stats& stats() const { return stats_; }

  /// Delivers a publish to every matching subscription except the
  /// publisher's own session. Returns the number of deliveries (sent plus
  /// buffered).
  size_t routePublish(const net::Address& from, uint16_t topicId, const Bytes& data) {
    const auto name = registry_.name(topicId);
    if (!name) return 0;
    size_t count = 0;
    for (auto& [addr, s] : sessions_) {
      if (addr == from) continue;
      if (s.mode == SessionMode::Lost || s.mode == SessionMode::Disconnected) continue;
      uint8_t bestQos = 0;
      bool matched = false;
      for (const auto& [filter, qos] : s.subscriptions) {
        const bool hit = filter.name ? topicFilterMatches(*filter.name, *name)
                                     : filter.id == topicId;
        if (hit) {
          matched = true;
          bestQos = std::max(bestQos, qos);
        }
      }
      if (!matched) continue;
      count++;
      if (s.mode == SessionMode::Asleep) {
        if (s.buffered.size() >= cfg_.sleepBufferLimit) s.buffered.pop_front();
        s.buffered.push_back({topicId, bestQos, data});
        stats_.buffered++;
        logf("buffer topic=" + *name + " client=" + s.clientId);
        continue;
      }
      deliver(addr, s, topicId, *name, bestQos, data);
      logf("route topic=" + *name + " to=" + s.clientId + " qos=" + std::to_string(bestQos));
    }
    stats_.routed++;
    return count;
  }

  /// Sends a sleeping session's buffer in FIFO order, then PINGRESP, and
  /// reactivates the session. Returns the number of messages flushed.
  size_t flushOnAwake(const net::Address& addr, Session& s) {
    size_t flushed = 0;
    while (!s.buffered.empty()) {
      auto b = std::move(s.buffered.front());
      s.buffered.pop_front();
      const auto name = registry_.name(b.topicId);
      deliver(addr, s, b.topicId, name.value_or(""), b.qos, b.data);
      flushed++;
    }
    s.mode = SessionMode::Active;
    s.sleepDeadline = 0;
    sendMessage(addr, Pingresp{});
    logf("awake client=" + s.clientId + " flushed=" + std::to_string(flushed));
    return flushed;
  }

 private:
  static constexpr Nanos kNever = INT64_MAX;

  enum class PendKind { PublishAck, PublishRec, PublishComp, Register };

  struct Pending {
    PendKind kind;
    net::Address to;
    uint16_t msgId;
    Message msg;
    Nanos deadline;
    int retriesLeft;
  };

  void logf(std::string line) { log_.push_back(std::move(line)); }

  void armWaker() {
    if (!waker_) return;
    const Nanos next = nextDeadline();
    if (next != kNever) waker_(next);
  }

  void sendMessage(const net::Address& to, const Message& m) { transport_.send(to, encode(m)); }

  void track(PendKind kind, const net::Address& to, uint16_t msgId, Message msg) {
    Pending p{kind, to, msgId, std::move(msg), 0, cfg_.transmissions};
    transmit(p);
    pending_.push_back(std::move(p));
  }

  void transmit(Pending& p) {
    sendMessage(p.to, p.msg);
    p.retriesLeft--;
    p.deadline = clock_.now() + cfg_.ackWait;
  }

  void resend(Pending& p) {
    if (auto* pub = std::get_if<Publish>(&p.msg)) pub->msgFlags |= flags::kDup;
    transmit(p);
  }

  std::optional<Pending> takePending(PendKind kind, const net::Address& to, uint16_t msgId) {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      if (it->kind == kind && it->to == to && it->msgId == msgId) {
        Pending p = std::move(*it);
        pending_.erase(it);
        return p;
      }
    }
    return std::nullopt;
  }

  Session* sessionOf(const net::Address& addr) {
    auto it = sessions_.find(addr);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  uint16_t nextMsgId(Session& s) {
    if (s.msgIdCounter == 0) s.msgIdCounter = 1;
    return s.msgIdCounter++;
  }

  void handle(const net::Address& from, const Message& msg) {
    if (auto* s = sessionOf(from)) s->lastSeen = clock_.now();

    switch (typeOf(msg)) {
      case MsgType::SearchGw:
        sendMessage(from, GwInfo{cfg_.gatewayId, {}});
        break;

      case MsgType::Connect: {
        const auto& m = std::get<Connect>(msg);
        // A live clientId connecting from a new address supersedes the old
        // session (MQTT convention).
        for (auto it = sessions_.begin(); it != sessions_.end();) {
          if (it->second.clientId == m.clientId && it->first != from) {
            logf("supersede client=" + m.clientId + " old=" + it->first.str());
            it = sessions_.erase(it);
          } else {
            ++it;
          }
        }
        auto& s = sessions_[from];
        if (m.msgFlags & flags::kCleanSession) s = Session{};
        s.clientId = m.clientId;
        s.mode = SessionMode::Active;
        s.keepAliveSeconds = m.duration;
        s.lastSeen = clock_.now();
        sendMessage(from, Connack{ReturnCode::Accepted});
        logf("connect client=" + m.clientId + " addr=" + from.str());
        break;
      }

      case MsgType::Register: {
        const auto& m = std::get<Register>(msg);
        auto assigned = registry_.assign(m.topicName);
        if (!assigned) {
          sendMessage(from, Regack{0, m.msgId, ReturnCode::RejectedNotSupported});
          break;
        }
        if (auto* s = sessionOf(from)) s->knownIds.insert(assigned.value());
        sendMessage(from, Regack{assigned.value(), m.msgId, ReturnCode::Accepted});
        break;
      }

      case MsgType::Subscribe: {
        const auto& m = std::get<Subscribe>(msg);
        auto* s = sessionOf(from);
        if (!s || s->mode != SessionMode::Active) {
          sendMessage(from, Suback{0, 0, m.msgId, ReturnCode::RejectedNotSupported});
          break;
        }
        uint16_t grantedId = 0;
        if (m.topic.name) {
          const std::string& name = *m.topic.name;
          const bool wildcard =
              name.find('+') != std::string::npos || name.find('#') != std::string::npos;
          if (!wildcard) {
            auto assigned = registry_.assign(name);
            if (!assigned) {
              sendMessage(from, Suback{0, 0, m.msgId, ReturnCode::RejectedNotSupported});
              break;
            }
            grantedId = assigned.value();
            s->knownIds.insert(grantedId);
          }
        } else {
          if (!registry_.name(m.topic.id)) {
            sendMessage(from, Suback{0, 0, m.msgId, ReturnCode::RejectedInvalidTopicId});
            break;
          }
          grantedId = m.topic.id;
          s->knownIds.insert(grantedId);
        }
        const uint8_t qos = flags::qosOf(m.msgFlags);
        s->subscriptions.emplace_back(m.topic, qos);
        sendMessage(from, Suback{flags::qos(qos), grantedId, m.msgId, ReturnCode::Accepted});
        break;
      }

      case MsgType::Unsubscribe: {
        const auto& m = std::get<Unsubscribe>(msg);
        if (auto* s = sessionOf(from)) {
          std::erase_if(s->subscriptions,
                        [&](const auto& sub) { return sub.first == m.topic; });
        }
        sendMessage(from, Unsuback{m.msgId});
        break;
      }

      case MsgType::Publish: {
        const auto& m = std::get<Publish>(msg);
        auto* s = sessionOf(from);
        const uint8_t qos = flags::qosOf(m.msgFlags);
        if (!registry_.name(m.topicId)) {
          stats_.rejected++;
          sendMessage(from, Puback{m.topicId, m.msgId, ReturnCode::RejectedInvalidTopicId});
          break;
        }
        if (qos == 0) {
          routePublish(from, m.topicId, m.data);
        } else if (qos == 1) {
          routePublish(from, m.topicId, m.data);
          sendMessage(from, Puback{m.topicId, m.msgId, ReturnCode::Accepted});
        } else {
          if (!s) {
            sendMessage(from, Puback{m.topicId, m.msgId, ReturnCode::RejectedNotSupported});
            break;
          }
          auto [it, fresh] =
              s->qos2Inbound.try_emplace(m.msgId, Session::Qos2In{m.topicId, qos, m.data, false});
          if (!fresh && it->second.released) {
            it->second = Session::Qos2In{m.topicId, qos, m.data, false};
          }
          sendMessage(from, Pubrec{m.msgId});
        }
        break;
      }

      case MsgType::Pubrel: {
        const auto& m = std::get<Pubrel>(msg);
        if (auto* s = sessionOf(from)) {
          auto it = s->qos2Inbound.find(m.msgId);
          if (it != s->qos2Inbound.end() && !it->second.released) {
            routePublish(from, it->second.topicId, it->second.data);
            it->second.released = true;
            it->second.data.clear();
          }
        }
        sendMessage(from, Pubcomp{m.msgId});
        break;
      }

      case MsgType::Puback: {
        const auto& m = std::get<Puback>(msg);
        takePending(PendKind::PublishAck, from, m.msgId);
        break;
      }
      case MsgType::Pubrec: {
        const auto& m = std::get<Pubrec>(msg);
        if (auto p = takePending(PendKind::PublishRec, from, m.msgId)) {
          track(PendKind::PublishComp, from, m.msgId, Message{Pubrel{m.msgId}});
        } else {
          for (auto& q : pending_)
            if (q.kind == PendKind::PublishComp && q.to == from && q.msgId == m.msgId)
              sendMessage(from, q.msg);
        }
        break;
      }
      case MsgType::Pubcomp: {
        const auto& m = std::get<Pubcomp>(msg);
        takePending(PendKind::PublishComp, from, m.msgId);
        break;
      }
      case MsgType::Regack: {
        const auto& m = std::get<Regack>(msg);
        takePending(PendKind::Register, from, m.msgId);
        break;
      }

      case MsgType::Pingreq: {
        const auto& m = std::get<Pingreq>(msg);
        if (!m.clientId.empty()) {
          // sleeping client polling for its buffer
          Session* s = nullptr;
          net::Address addr = from;
          for (auto& [a, sess] : sessions_) {
            if (sess.clientId == m.clientId) {
              s = &sess;
              addr = a;
              break;
            }
          }
          if (!s || s->mode == SessionMode::Lost || s->mode == SessionMode::Disconnected) {
            logf("awake-denied client=" + m.clientId);
            break;  // stale session: client must reconnect
          }
          flushOnAwake(addr, *s);
          break;
        }
        sendMessage(from, Pingresp{});
        break;
      }

      case MsgType::Disconnect: {
        const auto& m = std::get<Disconnect>(msg);
        auto* s = sessionOf(from);
        if (s) {
          if (m.duration) {
            s->mode = SessionMode::Asleep;
            s->sleepDeadline =
                *m.duration == 0 ? 0 : clock_.now() + seconds(*m.duration) + cfg_.sleepGrace;
            logf("sleep client=" + s->clientId + " duration=" + std::to_string(*m.duration));
          } else {
            s->mode = SessionMode::Disconnected;
            s->buffered.clear();
            logf("disconnect client=" + s->clientId);
          }
        }
        sendMessage(from, Disconnect{});
        break;
      }

      default:
        break;
    }
  }

  void deliver(const net::Address& addr, Session& s, uint16_t topicId, const std::string& name,
               uint8_t qos, const Bytes& data) {
    if (!s.knownIds.count(topicId)) {
      // wildcard-matched topic the client has no id for yet
      const uint16_t regMsgId = nextMsgId(s);
      track(PendKind::Register, addr, regMsgId, Message{Register{topicId, regMsgId, name}});
      s.knownIds.insert(topicId);
    }
    if (qos == 0) {
      sendMessage(addr, Publish{flags::qos(0), topicId, 0, data});
      return;
    }
    const uint16_t msgId = nextMsgId(s);
    const auto kind = qos == 1 ? PendKind::PublishAck : PendKind::PublishRec;
    track(kind, addr, msgId, Message{Publish{flags::qos(qos), topicId, msgId, data}});
  }

  net::Transport& transport_;
  Clock& clock_;
  GatewayConfig cfg_;
  std::function<void(Nanos)> waker_;

  TopicRegistry registry_;
  std::map<net::Address, Session> sessions_;
  std::vector<Pending> pending_;
  std::vector<std::string> log_;
  Stats stats_;
};

}  // namespace wasisn::mqttsn
