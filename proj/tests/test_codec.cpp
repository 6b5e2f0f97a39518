#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "wasisn/mqttsn/codec.hpp"

using namespace wasisn;
using namespace wasisn::mqttsn;

TEST_CASE("SEARCHGW wire bytes") {
  REQUIRE(encode(Message{SearchGw{1}}) == Bytes{0x03, 0x01, 0x01});
}

TEST_CASE("CONNECT wire bytes for WASM client") {
  const Bytes expected{0x0a, 0x04, 0x04, 0x01, 0x00, 0x1e, 'W', 'A', 'S', 'M'};
  REQUIRE(encode(Message{Connect{flags::kCleanSession, 30, "WASM"}}) == expected);
}

TEST_CASE("PUBLISH QoS flag placement") {
  auto wire = encode(Message{Publish{flags::qos(2), 7, 9, toBytes("x")}});
  // length, type, flags, topicId(2), msgId(2), data
  REQUIRE(wire[1] == 0x0c);
  REQUIRE(wire[2] == 0x40);
  REQUIRE(wire[3] == 0x00);
  REQUIRE(wire[4] == 0x07);
}

TEST_CASE("decode rejects length mismatches") {
  auto wire = encode(Message{SearchGw{1}});
  SECTION("declared length too long") {
    wire[0] = 0x04;
    REQUIRE(decode(wire).error() == Errc::BadEncoding);
  }
  SECTION("trailing junk") {
    wire.push_back(0xff);
    REQUIRE(decode(wire).error() == Errc::BadEncoding);
  }
  SECTION("truncated body") {
    auto connect = encode(Message{Connect{0x04, 30, "WASM"}});
    connect.resize(4);
    connect[0] = 0x04;
    REQUIRE(decode(connect).error() == Errc::BadEncoding);
  }
  SECTION("empty datagram") {
    REQUIRE(decode(Bytes{}).error() == Errc::BadEncoding);
  }
}

TEST_CASE("three-octet length form") {
  Publish big{flags::qos(0), 3, 0, Bytes(300, 0xab)};
  auto wire = encode(Message{big});
  REQUIRE(wire[0] == 0x01);
  REQUIRE(wire.size() == 300u + 3 + 1 + 5);  // data + length field + type + flags/topic/msgid
  auto back = decode(wire);
  REQUIRE(back.ok());
  REQUIRE(std::get<Publish>(back.value()) == big);
}

TEST_CASE("codec roundtrip property over all message types") {
  Rng rng(20260811);
  for (int i = 0; i < 1900; ++i) {
    const Message msg = testutil::randomMessage(rng, i);
    const Bytes wire = encode(msg);
    auto decoded = decode(wire);
    REQUIRE(decoded.ok());
    REQUIRE(decoded.value() == msg);
    // encode(decode(wire)) == wire
    REQUIRE(encode(decoded.value()) == wire);
  }
}

TEST_CASE("topic filter matching") {
  CHECK(topicFilterMatches("humidity", "humidity"));
  CHECK_FALSE(topicFilterMatches("humidity", "humidity2"));
  CHECK(topicFilterMatches("#", "a/b/c"));
  CHECK(topicFilterMatches("a/+/c", "a/b/c"));
  CHECK_FALSE(topicFilterMatches("a/+", "a/b/c"));
  CHECK(topicFilterMatches("a/#", "a/b/c"));
  CHECK_FALSE(topicFilterMatches("a/#", "b/c"));
  CHECK(topicFilterMatches("/resources/device01/#", "/resources/device01/BME280/temperature/request"));
  CHECK_FALSE(topicFilterMatches("/resources/device02/#", "/resources/device01/BME280/temperature"));
}
