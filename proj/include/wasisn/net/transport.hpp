#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "wasisn/common/bytes.hpp"
#include "wasisn/common/clock.hpp"
#include "wasisn/common/result.hpp"

namespace wasisn::net {

struct Address {
  std::string host;
  uint16_t port = 0;

  auto operator<=>(const Address&) const = default;

  std::string str() const { return host + ":" + std::to_string(port); }
};

struct Datagram {
  Address from;
  Bytes data;
};

/// One bound endpoint. The client state machine pulls datagrams; reactor
/// components (gateway, device agent) can instead install an inline handler
/// through the owning kernel. Implementations: SimTransport (deterministic
/// in-process network) and UdpTransport (real sockets).
class Transport {
 public:
  virtual ~Transport() = default;

  /// Binds a local port; 0 requests an unused one. Returns the bound port.
  virtual Result<uint16_t> bind(uint16_t port) = 0;
  virtual void close() = 0;
  virtual bool bound() const = 0;
  virtual Address localAddress() const = 0;

  virtual void send(const Address& to, std::span<const uint8_t> data) = 0;

  /// Non-blocking: pops the next datagram if one is queued.
  virtual std::optional<Datagram> receive() = 0;

  /// Blocks (or advances simulated time) until a datagram is available or
  /// the clock reaches `deadline`. Returns true if a datagram is waiting.
  virtual bool waitUntil(Nanos deadline) = 0;

  /// Address that reaches every listener (SEARCHGW discovery).
  virtual Address broadcastAddress() const = 0;
};

}  // namespace wasisn::net
