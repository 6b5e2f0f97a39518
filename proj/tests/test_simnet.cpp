#include <catch2/catch_amalgamated.hpp>

#include "wasisn/net/simnet.hpp"

using namespace wasisn;
using namespace wasisn::net;

TEST_CASE("simnet delivers with configured latency") {
  SimClock clock;
  SimNet net(clock, 1, {.loss = 0, .latency = milliseconds(5)});
  auto a = net.createTransport("a");
  auto b = net.createTransport("b");
  REQUIRE(a->bind(100).value() == 100);
  REQUIRE(b->bind(200).value() == 200);

  Bytes payload{1, 2, 3};
  a->send({"b", 200}, payload);
  REQUIRE_FALSE(b->receive().has_value());
  REQUIRE(b->waitUntil(milliseconds(10)));
  REQUIRE(clock.now() == milliseconds(5));
  auto d = b->receive();
  REQUIRE(d.has_value());
  CHECK(d->from == Address{"a", 100});
  CHECK(d->data == payload);
}

TEST_CASE("waitUntil advances to deadline when nothing arrives") {
  SimClock clock;
  SimNet net(clock, 1, {});
  auto a = net.createTransport("a");
  REQUIRE(a->bind(0).ok());
  REQUIRE_FALSE(a->waitUntil(seconds(3)));
  REQUIRE(clock.now() == seconds(3));
}

TEST_CASE("loss drops deterministically under a fixed seed") {
  auto runOnce = [](uint64_t seed) {
    SimClock clock;
    SimNet net(clock, seed, {.loss = 0.5, .latency = 1});
    auto a = net.createTransport("a");
    auto b = net.createTransport("b");
    (void)a->bind(1);
    (void)b->bind(2);
    for (int i = 0; i < 100; ++i) a->send({"b", 2}, Bytes{static_cast<uint8_t>(i)});
    net.run();
    Bytes seen;
    while (auto d = b->receive()) seen.push_back(d->data[0]);
    return seen;
  };
  auto first = runOnce(7);
  auto second = runOnce(7);
  REQUIRE(first == second);
  REQUIRE(first.size() > 20);
  REQUIRE(first.size() < 80);
  REQUIRE(runOnce(8) != first);
}

TEST_CASE("broadcast reaches all bound endpoints except sender") {
  SimClock clock;
  SimNet net(clock, 1, {});
  auto a = net.createTransport("a");
  auto b = net.createTransport("b");
  auto c = net.createTransport("c");
  (void)a->bind(9);
  (void)b->bind(9);
  (void)c->bind(9);
  a->send(a->broadcastAddress(), Bytes{42});
  net.run();
  CHECK(b->receive().has_value());
  CHECK(c->receive().has_value());
  CHECK_FALSE(a->receive().has_value());
}

TEST_CASE("handler endpoints run inline while another endpoint waits") {
  SimClock clock;
  SimNet net(clock, 1, {.loss = 0, .latency = milliseconds(1)});
  auto client = net.createTransport("client");
  auto echo = net.createTransport("echo");
  (void)client->bind(10);
  (void)echo->bind(20);
  echo->setHandler([&](const Datagram& d) { echo->send(d.from, d.data); });

  client->send({"echo", 20}, Bytes{7});
  REQUIRE(client->waitUntil(seconds(1)));
  REQUIRE(clock.now() == milliseconds(2));  // one round trip
  REQUIRE(client->receive()->data == Bytes{7});
}

TEST_CASE("scripted drop hook") {
  SimClock clock;
  SimNet net(clock, 1, {});
  auto a = net.createTransport("a");
  auto b = net.createTransport("b");
  (void)a->bind(1);
  (void)b->bind(2);
  int dropped = 0;
  net.setDropFn([&](const Address&, const Address&, std::span<const uint8_t> d) {
    if (d[0] % 2 == 0) {
      ++dropped;
      return true;
    }
    return false;
  });
  for (uint8_t i = 0; i < 10; ++i) a->send({"b", 2}, Bytes{i});
  net.run();
  int received = 0;
  while (b->receive()) ++received;
  CHECK(dropped == 5);
  CHECK(received == 5);
}
