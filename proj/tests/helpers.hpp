#pragma once

// Shared generators for the unit and acceptance suites.

#include <string>

#include "wasisn/common/rng.hpp"
#include "wasisn/mqttsn/codec.hpp"

namespace testutil {

using namespace wasisn;
using namespace wasisn::mqttsn;

inline std::string randomText(Rng& rng, size_t minLen, size_t maxLen) {
  static constexpr char kAlpha[] = "abcdefghijklmnopqrstuvwxyz0123456789/_-";
  const size_t n = minLen + rng.below(maxLen - minLen + 1);
  std::string s;
  for (size_t i = 0; i < n; ++i) s.push_back(kAlpha[rng.below(sizeof(kAlpha) - 1)]);
  return s;
}

inline Bytes randomBytes(Rng& rng, size_t minLen, size_t maxLen) {
  const size_t n = minLen + rng.below(maxLen - minLen + 1);
  Bytes b(n);
  for (auto& c : b) c = static_cast<uint8_t>(rng.below(256));
  return b;
}

inline uint16_t randomU16(Rng& rng) { return static_cast<uint16_t>(rng.below(0x10000)); }

inline ReturnCode randomCode(Rng& rng) { return static_cast<ReturnCode>(rng.below(4)); }

inline TopicRef randomTopicRef(Rng& rng) {
  if (rng.chance(0.5)) return TopicRef::byName(randomText(rng, 1, 30));
  TopicRef t = TopicRef::byId(randomU16(rng));
  t.idType = rng.chance(0.5) ? TopicIdType::Predefined : TopicIdType::Short;
  return t;
}

/// Byte-canonical random message covering every implemented type; index
/// selects the type so callers can sweep all 19 deterministically.
inline Message randomMessage(Rng& rng, int typeIndex) {
  const uint8_t pubFlags =
      static_cast<uint8_t>(flags::qos(static_cast<uint8_t>(rng.below(3))) |
                           (rng.chance(0.3) ? flags::kDup : 0) |
                           (rng.chance(0.2) ? flags::kRetain : 0));
  auto subFlags = [&](const TopicRef& t) {
    uint8_t f = flags::qos(static_cast<uint8_t>(rng.below(3)));
    if (rng.chance(0.3)) f |= flags::kDup;
    f |= static_cast<uint8_t>(t.name ? TopicIdType::Name : t.idType);
    return f;
  };
  switch (typeIndex % 19) {
    case 0:
      return Advertise{static_cast<uint8_t>(rng.below(256)), randomU16(rng)};
    case 1:
      return SearchGw{static_cast<uint8_t>(rng.below(256))};
    case 2:
      return GwInfo{static_cast<uint8_t>(rng.below(256)), randomBytes(rng, 0, 16)};
    case 3:
      return Connect{static_cast<uint8_t>(rng.below(256) & ~0x03), randomU16(rng),
                     randomText(rng, 1, 23)};
    case 4:
      return Connack{randomCode(rng)};
    case 5:
      return Register{randomU16(rng), randomU16(rng), randomText(rng, 1, 40)};
    case 6:
      return Regack{randomU16(rng), randomU16(rng), randomCode(rng)};
    case 7: {
      // occasionally force the 3-octet length form
      const size_t maxLen = rng.chance(0.2) ? 2000 : 128;
      return Publish{pubFlags, randomU16(rng), randomU16(rng), randomBytes(rng, 0, maxLen)};
    }
    case 8:
      return Puback{randomU16(rng), randomU16(rng), randomCode(rng)};
    case 9:
      return Pubrec{randomU16(rng)};
    case 10:
      return Pubrel{randomU16(rng)};
    case 11:
      return Pubcomp{randomU16(rng)};
    case 12: {
      auto t = randomTopicRef(rng);
      auto f = subFlags(t);
      return Subscribe{f, randomU16(rng), std::move(t)};
    }
    case 13:
      return Suback{flags::qos(static_cast<uint8_t>(rng.below(3))), randomU16(rng),
                    randomU16(rng), randomCode(rng)};
    case 14: {
      auto t = randomTopicRef(rng);
      auto f = subFlags(t);
      return Unsubscribe{f, randomU16(rng), std::move(t)};
    }
    case 15:
      return Unsuback{randomU16(rng)};
    case 16:
      return Pingreq{rng.chance(0.5) ? std::string{} : randomText(rng, 1, 23)};
    case 17:
      return Pingresp{};
    default: {
      Disconnect d;
      if (rng.chance(0.5)) d.duration = randomU16(rng);
      return d;
    }
  }
}

}  // namespace testutil
