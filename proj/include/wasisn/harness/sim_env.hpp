#pragma once

#include <memory>

#include "wasisn/common/clock.hpp"
#include "wasisn/mqttsn/client.hpp"
#include "wasisn/mqttsn/gateway.hpp"
#include "wasisn/net/simnet.hpp"

namespace wasisn::harness {

/// Simulated clock + network + one gateway, wired so the gateway reacts
/// inline to datagrams and wakes up for its own deadlines. The standard
/// substrate for integration tests, scenarios and benches.
class SimEnv {
 public:
  explicit SimEnv(uint64_t seed = 1, net::FaultSpec faults = {.loss = 0,
                                                              .latency = milliseconds(1),
                                                              .jitter = 0},
                  mqttsn::GatewayConfig gwCfg = {})
      : net_(clock_, seed, faults),
        gatewayTransport_(net_.createTransport("gw")),
        gateway_(*gatewayTransport_, clock_, gwCfg) {
    (void)gateway_.start(kGatewayPort);
    gatewayTransport_->setHandler(
        [this](const net::Datagram& d) { gateway_.onDatagram(d); });
    gateway_.setWaker([this](Nanos at) {
      net_.schedule(at, [this] { gateway_.tick(clock_.now()); });
    });
  }

  static constexpr uint16_t kGatewayPort = 47193;

  SimClock& clock() { return clock_; }
  net::SimNet& net() { return net_; }
  mqttsn::Gateway& gateway() { return gateway_; }
  net::Address gatewayAddress() const { return {"gw", kGatewayPort}; }

  /// New client endpoint on its own simulated host.
  struct ClientHandle {
    std::unique_ptr<net::SimTransport> transport;
    std::unique_ptr<mqttsn::Client> client;
    mqttsn::Client* operator->() { return client.get(); }
    mqttsn::Client& operator*() { return *client; }
  };

  ClientHandle makeClient(const std::string& host, mqttsn::ClientConfig cfg = {}) {
    ClientHandle h;
    h.transport = net_.createTransport(host);
    h.client = std::make_unique<mqttsn::Client>(*h.transport, clock_, cfg);
    return h;
  }

  /// Pumps network events within `window` of simulated time, servicing the
  /// given clients after each event so multi-hop handshakes complete.
  void settle(std::initializer_list<mqttsn::Client*> clients,
              Nanos window = milliseconds(200)) {
    const Nanos deadline = clock_.now() + window;
    for (;;) {
      for (auto* c : clients) c->service();
      const Nanos next = net_.nextEventTime();
      if (next == net::SimNet::kNoEvent || next > deadline) break;
      net_.step();
    }
  }

 private:
  SimClock clock_;
  net::SimNet net_;
  std::unique_ptr<net::SimTransport> gatewayTransport_;
  mqttsn::Gateway gateway_;
};

}  // namespace wasisn::harness
