#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "wasisn/common/bytes.hpp"
#include "wasisn/common/result.hpp"

// MQTT-SN v1.2 wire codec. Multi-byte integers are big-endian on the wire.
// Datagrams begin with a length field (one octet, or 0x01 followed by a
// 16-bit length for messages longer than 255 octets), then the message type
// octet, then the type-specific payload.

namespace wasisn::mqttsn {

enum class MsgType : uint8_t {
  Advertise = 0x00,
  SearchGw = 0x01,
  GwInfo = 0x02,
  Connect = 0x04,
  Connack = 0x05,
  Register = 0x0a,
  Regack = 0x0b,
  Publish = 0x0c,
  Puback = 0x0d,
  Pubcomp = 0x0e,
  Pubrec = 0x0f,
  Pubrel = 0x10,
  Subscribe = 0x12,
  Suback = 0x13,
  Unsubscribe = 0x14,
  Unsuback = 0x15,
  Pingreq = 0x16,
  Pingresp = 0x17,
  Disconnect = 0x18,
};

// Flags octet bit layout.
namespace flags {
constexpr uint8_t kDup = 0x80;
constexpr uint8_t kQosMask = 0x60;
constexpr uint8_t kQosShift = 5;
constexpr uint8_t kRetain = 0x10;
constexpr uint8_t kWill = 0x08;
constexpr uint8_t kCleanSession = 0x04;
constexpr uint8_t kTopicIdTypeMask = 0x03;

constexpr uint8_t qos(uint8_t level) {
  return static_cast<uint8_t>((level << kQosShift) & kQosMask);
}
constexpr uint8_t qosOf(uint8_t f) { return (f & kQosMask) >> kQosShift; }
}  // namespace flags

// TopicIdType values.
enum class TopicIdType : uint8_t {
  Name = 0x00,       // full topic name carried inline
  Predefined = 0x01, // 16-bit topic id
  Short = 0x02,      // 2-character short name (encoded like an id)
};

enum class ReturnCode : uint8_t {
  Accepted = 0x00,
  RejectedCongestion = 0x01,
  RejectedInvalidTopicId = 0x02,
  RejectedNotSupported = 0x03,
};

struct Advertise {
  uint8_t gatewayId = 0;
  uint16_t duration = 0;
  bool operator==(const Advertise&) const = default;
};

struct SearchGw {
  uint8_t radius = 0;
  bool operator==(const SearchGw&) const = default;
};

struct GwInfo {
  uint8_t gatewayId = 0;
  Bytes gatewayAddress;  // present only when relayed by a client; empty from a gateway
  bool operator==(const GwInfo&) const = default;
};

struct Connect {
  uint8_t msgFlags = 0;
  uint16_t duration = 0;  // keep-alive seconds
  std::string clientId;
  bool operator==(const Connect&) const = default;
};

struct Connack {
  ReturnCode code = ReturnCode::Accepted;
  bool operator==(const Connack&) const = default;
};

struct Register {
  uint16_t topicId = 0;  // 0x0000 when sent by a client
  uint16_t msgId = 0;
  std::string topicName;
  bool operator==(const Register&) const = default;
};

struct Regack {
  uint16_t topicId = 0;
  uint16_t msgId = 0;
  ReturnCode code = ReturnCode::Accepted;
  bool operator==(const Regack&) const = default;
};

struct Publish {
  uint8_t msgFlags = 0;
  uint16_t topicId = 0;
  uint16_t msgId = 0;  // 0x0000 for QoS 0
  Bytes data;
  bool operator==(const Publish&) const = default;
};

struct Puback {
  uint16_t topicId = 0;
  uint16_t msgId = 0;
  ReturnCode code = ReturnCode::Accepted;
  bool operator==(const Puback&) const = default;
};

struct Pubrec {
  uint16_t msgId = 0;
  bool operator==(const Pubrec&) const = default;
};
struct Pubrel {
  uint16_t msgId = 0;
  bool operator==(const Pubrel&) const = default;
};
struct Pubcomp {
  uint16_t msgId = 0;
  bool operator==(const Pubcomp&) const = default;
};

/// Topic reference used by SUBSCRIBE/UNSUBSCRIBE: either a (possibly
/// wildcarded) topic name or a previously assigned 16-bit id.
struct TopicRef {
  std::optional<std::string> name;  // set -> TopicIdType::Name
  uint16_t id = 0;                  // used when name is absent
  TopicIdType idType = TopicIdType::Predefined;  // wire form of the id case
  bool operator==(const TopicRef&) const = default;

  static TopicRef byName(std::string n) { return TopicRef{std::move(n), 0, TopicIdType::Name}; }
  static TopicRef byId(uint16_t id) {
    return TopicRef{std::nullopt, id, TopicIdType::Predefined};
  }
};

struct Subscribe {
  uint8_t msgFlags = 0;  // QoS + DUP bits; TopicIdType bits derived from topic
  uint16_t msgId = 0;
  TopicRef topic;
  bool operator==(const Subscribe&) const = default;
};

struct Suback {
  uint8_t msgFlags = 0;  // granted QoS
  uint16_t topicId = 0;
  uint16_t msgId = 0;
  ReturnCode code = ReturnCode::Accepted;
  bool operator==(const Suback&) const = default;
};

struct Unsubscribe {
  uint8_t msgFlags = 0;
  uint16_t msgId = 0;
  TopicRef topic;
  bool operator==(const Unsubscribe&) const = default;
};

struct Unsuback {
  uint16_t msgId = 0;
  bool operator==(const Unsuback&) const = default;
};

struct Pingreq {
  std::string clientId;  // non-empty only when a sleeping client polls
  bool operator==(const Pingreq&) const = default;
};

struct Pingresp {
  bool operator==(const Pingresp&) const = default;
};

struct Disconnect {
  std::optional<uint16_t> duration;  // present -> client is going to sleep
  bool operator==(const Disconnect&) const = default;
};

using Message = std::variant<Advertise, SearchGw, GwInfo, Connect, Connack,
                             Register, Regack, Publish, Puback, Pubrec, Pubrel,
                             Pubcomp, Subscribe, Suback, Unsubscribe, Unsuback,
                             Pingreq, Pingresp, Disconnect>;

constexpr MsgType typeOf(const Message& m) {
  struct V {
    MsgType operator()(const Advertise&) { return MsgType::Advertise; }
    MsgType operator()(const SearchGw&) { return MsgType::SearchGw; }
    MsgType operator()(const GwInfo&) { return MsgType::GwInfo; }
    MsgType operator()(const Connect&) { return MsgType::Connect; }
    MsgType operator()(const Connack&) { return MsgType::Connack; }
    MsgType operator()(const Register&) { return MsgType::Register; }
    MsgType operator()(const Regack&) { return MsgType::Regack; }
    MsgType operator()(const Publish&) { return MsgType::Publish; }
    MsgType operator()(const Puback&) { return MsgType::Puback; }
    MsgType operator()(const Pubrec&) { return MsgType::Pubrec; }
    MsgType operator()(const Pubrel&) { return MsgType::Pubrel; }
    MsgType operator()(const Pubcomp&) { return MsgType::Pubcomp; }
    MsgType operator()(const Subscribe&) { return MsgType::Subscribe; }
    MsgType operator()(const Suback&) { return MsgType::Suback; }
    MsgType operator()(const Unsubscribe&) { return MsgType::Unsubscribe; }
    MsgType operator()(const Unsuback&) { return MsgType::Unsuback; }
    MsgType operator()(const Pingreq&) { return MsgType::Pingreq; }
    MsgType operator()(const Pingresp&) { return MsgType::Pingresp; }
    MsgType operator()(const Disconnect&) { return MsgType::Disconnect; }
  };
  return std::visit(V{}, m);
}

namespace detail {

constexpr uint8_t kProtocolId = 0x01;

inline void putU16be(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xff));
}

/// Reader over the variable part of one datagram (length prefix stripped).
class WireReader {
 public:
  explicit WireReader(std::span<const uint8_t> d) : data_(d) {}
  size_t remaining() const { return data_.size() - pos_; }

  bool u8(uint8_t& v) {
    if (remaining() < 1) return false;
    v = data_[pos_++];
    return true;
  }
  bool u16be(uint16_t& v) {
    if (remaining() < 2) return false;
    v = static_cast<uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return true;
  }
  void rest(Bytes& out) {
    out.assign(data_.begin() + static_cast<ptrdiff_t>(pos_), data_.end());
    pos_ = data_.size();
  }
  void rest(std::string& out) {
    out.assign(data_.begin() + static_cast<ptrdiff_t>(pos_), data_.end());
    pos_ = data_.size();
  }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

inline void encodeBody(const Advertise& m, Bytes& out) {
  out.push_back(m.gatewayId);
  putU16be(out, m.duration);
}
inline void encodeBody(const SearchGw& m, Bytes& out) { out.push_back(m.radius); }
inline void encodeBody(const GwInfo& m, Bytes& out) {
  out.push_back(m.gatewayId);
  out.insert(out.end(), m.gatewayAddress.begin(), m.gatewayAddress.end());
}
inline void encodeBody(const Connect& m, Bytes& out) {
  out.push_back(m.msgFlags);
  out.push_back(kProtocolId);
  putU16be(out, m.duration);
  out.insert(out.end(), m.clientId.begin(), m.clientId.end());
}
inline void encodeBody(const Connack& m, Bytes& out) {
  out.push_back(static_cast<uint8_t>(m.code));
}
inline void encodeBody(const Register& m, Bytes& out) {
  putU16be(out, m.topicId);
  putU16be(out, m.msgId);
  out.insert(out.end(), m.topicName.begin(), m.topicName.end());
}
inline void encodeBody(const Regack& m, Bytes& out) {
  putU16be(out, m.topicId);
  putU16be(out, m.msgId);
  out.push_back(static_cast<uint8_t>(m.code));
}
inline void encodeBody(const Publish& m, Bytes& out) {
  out.push_back(m.msgFlags);
  putU16be(out, m.topicId);
  putU16be(out, m.msgId);
  out.insert(out.end(), m.data.begin(), m.data.end());
}
inline void encodeBody(const Puback& m, Bytes& out) {
  putU16be(out, m.topicId);
  putU16be(out, m.msgId);
  out.push_back(static_cast<uint8_t>(m.code));
}
inline void encodeBody(const Pubrec& m, Bytes& out) { putU16be(out, m.msgId); }
inline void encodeBody(const Pubrel& m, Bytes& out) { putU16be(out, m.msgId); }
inline void encodeBody(const Pubcomp& m, Bytes& out) { putU16be(out, m.msgId); }

inline uint8_t topicFlags(uint8_t base, const TopicRef& t) {
  uint8_t f = base & ~flags::kTopicIdTypeMask;
  f |= static_cast<uint8_t>(t.name ? TopicIdType::Name : t.idType);
  return f;
}
inline void encodeTopicRef(const TopicRef& t, Bytes& out) {
  if (t.name) {
    out.insert(out.end(), t.name->begin(), t.name->end());
  } else {
    putU16be(out, t.id);
  }
}
inline void encodeBody(const Subscribe& m, Bytes& out) {
  out.push_back(topicFlags(m.msgFlags, m.topic));
  putU16be(out, m.msgId);
  encodeTopicRef(m.topic, out);
}
inline void encodeBody(const Suback& m, Bytes& out) {
  out.push_back(m.msgFlags);
  putU16be(out, m.topicId);
  putU16be(out, m.msgId);
  out.push_back(static_cast<uint8_t>(m.code));
}
inline void encodeBody(const Unsubscribe& m, Bytes& out) {
  out.push_back(topicFlags(m.msgFlags, m.topic));
  putU16be(out, m.msgId);
  encodeTopicRef(m.topic, out);
}
inline void encodeBody(const Unsuback& m, Bytes& out) { putU16be(out, m.msgId); }
inline void encodeBody(const Pingreq& m, Bytes& out) {
  out.insert(out.end(), m.clientId.begin(), m.clientId.end());
}
inline void encodeBody(const Pingresp&, Bytes&) {}
inline void encodeBody(const Disconnect& m, Bytes& out) {
  if (m.duration) putU16be(out, *m.duration);
}

}  // namespace detail

/// Encodes one message into a complete datagram, picking the one- or
/// three-octet length form as needed.
inline Bytes encode(const Message& msg) {
  Bytes body;
  std::visit([&](const auto& m) { detail::encodeBody(m, body); }, msg);

  const size_t shortLen = body.size() + 2;  // length octet + type octet
  Bytes out;
  if (shortLen <= 0xff) {
    out.reserve(shortLen);
    out.push_back(static_cast<uint8_t>(shortLen));
  } else {
    const size_t longLen = body.size() + 4;  // 0x01 + u16 length + type octet
    out.reserve(longLen);
    out.push_back(0x01);
    out.push_back(static_cast<uint8_t>(longLen >> 8));
    out.push_back(static_cast<uint8_t>(longLen & 0xff));
  }
  out.push_back(static_cast<uint8_t>(typeOf(msg)));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

/// Decodes one datagram. Rejects length-field mismatches and truncated
/// bodies; trailing bytes beyond the declared length are an error too, since
/// one datagram carries exactly one message.
inline Result<Message> decode(std::span<const uint8_t> datagram) {
  if (datagram.size() < 2) return Errc::BadEncoding;

  size_t headerLen;
  size_t totalLen;
  if (datagram[0] == 0x01) {
    if (datagram.size() < 4) return Errc::BadEncoding;
    totalLen = static_cast<size_t>((datagram[1] << 8) | datagram[2]);
    headerLen = 3;
  } else {
    totalLen = datagram[0];
    headerLen = 1;
  }
  if (totalLen != datagram.size() || totalLen < headerLen + 1) return Errc::BadEncoding;

  const auto type = static_cast<MsgType>(datagram[headerLen]);
  detail::WireReader r(datagram.subspan(headerLen + 1));

  switch (type) {
    case MsgType::Advertise: {
      Advertise m;
      if (!r.u8(m.gatewayId) || !r.u16be(m.duration) || r.remaining()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::SearchGw: {
      SearchGw m;
      if (!r.u8(m.radius) || r.remaining()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::GwInfo: {
      GwInfo m;
      if (!r.u8(m.gatewayId)) return Errc::BadEncoding;
      r.rest(m.gatewayAddress);
      return Message{m};
    }
    case MsgType::Connect: {
      Connect m;
      uint8_t proto;
      if (!r.u8(m.msgFlags) || !r.u8(proto) || !r.u16be(m.duration)) return Errc::BadEncoding;
      if (proto != detail::kProtocolId) return Errc::BadEncoding;
      r.rest(m.clientId);
      if (m.clientId.empty()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::Connack: {
      uint8_t c;
      if (!r.u8(c) || r.remaining()) return Errc::BadEncoding;
      return Message{Connack{static_cast<ReturnCode>(c)}};
    }
    case MsgType::Register: {
      Register m;
      if (!r.u16be(m.topicId) || !r.u16be(m.msgId)) return Errc::BadEncoding;
      r.rest(m.topicName);
      if (m.topicName.empty()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::Regack: {
      Regack m;
      uint8_t c;
      if (!r.u16be(m.topicId) || !r.u16be(m.msgId) || !r.u8(c) || r.remaining())
        return Errc::BadEncoding;
      m.code = static_cast<ReturnCode>(c);
      return Message{m};
    }
    case MsgType::Publish: {
      Publish m;
      if (!r.u8(m.msgFlags) || !r.u16be(m.topicId) || !r.u16be(m.msgId)) return Errc::BadEncoding;
      r.rest(m.data);
      return Message{m};
    }
    case MsgType::Puback: {
      Puback m;
      uint8_t c;
      if (!r.u16be(m.topicId) || !r.u16be(m.msgId) || !r.u8(c) || r.remaining())
        return Errc::BadEncoding;
      m.code = static_cast<ReturnCode>(c);
      return Message{m};
    }
    case MsgType::Pubrec: {
      Pubrec m;
      if (!r.u16be(m.msgId) || r.remaining()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::Pubrel: {
      Pubrel m;
      if (!r.u16be(m.msgId) || r.remaining()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::Pubcomp: {
      Pubcomp m;
      if (!r.u16be(m.msgId) || r.remaining()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::Subscribe:
    case MsgType::Unsubscribe: {
      uint8_t f;
      uint16_t msgId;
      if (!r.u8(f) || !r.u16be(msgId)) return Errc::BadEncoding;
      TopicRef topic;
      const auto idType = static_cast<TopicIdType>(f & flags::kTopicIdTypeMask);
      switch (idType) {
        case TopicIdType::Name: {
          std::string name;
          r.rest(name);
          if (name.empty()) return Errc::BadEncoding;
          topic = TopicRef::byName(std::move(name));
          break;
        }
        case TopicIdType::Predefined:
        case TopicIdType::Short: {
          uint16_t id;
          if (!r.u16be(id) || r.remaining()) return Errc::BadEncoding;
          topic = TopicRef::byId(id);
          topic.idType = idType;
          break;
        }
        default:
          return Errc::BadEncoding;
      }
      if (type == MsgType::Subscribe) return Message{Subscribe{f, msgId, std::move(topic)}};
      return Message{Unsubscribe{f, msgId, std::move(topic)}};
    }
    case MsgType::Suback: {
      Suback m;
      uint8_t c;
      if (!r.u8(m.msgFlags) || !r.u16be(m.topicId) || !r.u16be(m.msgId) || !r.u8(c) ||
          r.remaining())
        return Errc::BadEncoding;
      m.code = static_cast<ReturnCode>(c);
      return Message{m};
    }
    case MsgType::Unsuback: {
      Unsuback m;
      if (!r.u16be(m.msgId) || r.remaining()) return Errc::BadEncoding;
      return Message{m};
    }
    case MsgType::Pingreq: {
      Pingreq m;
      r.rest(m.clientId);
      return Message{m};
    }
    case MsgType::Pingresp: {
      if (r.remaining()) return Errc::BadEncoding;
      return Message{Pingresp{}};
    }
    case MsgType::Disconnect: {
      Disconnect m;
      if (r.remaining() == 0) return Message{m};
      uint16_t d;
      if (!r.u16be(d) || r.remaining()) return Errc::BadEncoding;
      m.duration = d;
      return Message{m};
    }
  }
  return Errc::BadEncoding;
}

/// MQTT topic filter matching on '/'-separated levels: '+' matches one
/// level, '#' matches any remainder (must be last).
inline bool topicFilterMatches(std::string_view filter, std::string_view topic) {
  size_t fi = 0, ti = 0;
  for (;;) {
    const size_t fend = std::min(filter.find('/', fi), filter.size());
    const std::string_view flevel = filter.substr(fi, fend - fi);
    if (flevel == "#") return fend >= filter.size();
    const size_t tend = std::min(topic.find('/', ti), topic.size());
    const std::string_view tlevel = topic.substr(ti, tend - ti);
    if (flevel != "+" && flevel != tlevel) return false;
    const bool fLast = fend >= filter.size();
    const bool tLast = tend >= topic.size();
    if (fLast || tLast) return fLast && tLast;
    fi = fend + 1;
    ti = tend + 1;
  }
}

}  // namespace wasisn::mqttsn
