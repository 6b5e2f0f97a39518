#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "wasisn/net/transport.hpp"

namespace wasisn::net {

/// IPv4 UDP transport for wall-clock runs of the CLI. waitUntil() maps the
/// monotonic deadline onto a poll() timeout.
class UdpTransport final : public Transport {
 public:
  explicit UdpTransport(const Clock& clock) : clock_(clock) {}
  ~UdpTransport() override { close(); }

  UdpTransport(const UdpTransport&) = delete;
  UdpTransport& operator=(const UdpTransport&) = delete;

  Result<uint16_t> bind(uint16_t port) override {
    if (fd_ >= 0) return Errc::AlreadyStarted;
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) return Errc::BindError;
    int on = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &on, sizeof on);
    ::setsockopt(fd_, SOL_SOCKET, SO_BROADCAST, &on, sizeof on);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    sa.sin_addr.s_addr = htonl(INADDR_ANY);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
      ::close(fd_);
      fd_ = -1;
      return Errc::BindError;
    }
    socklen_t len = sizeof sa;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    local_ = {"0.0.0.0", ntohs(sa.sin_port)};
    return local_.port;
  }

  void close() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  bool bound() const override { return fd_ >= 0; }
  Address localAddress() const override { return local_; }

  void send(const Address& to, std::span<const uint8_t> data) override {
    if (fd_ < 0) return;
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(to.port);
    const char* host = to.host == "*" ? "255.255.255.255" : to.host.c_str();
    if (::inet_pton(AF_INET, host, &sa.sin_addr) != 1) return;
    ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa);
  }

  std::optional<Datagram> receive() override {
    if (fd_ < 0) return std::nullopt;
    uint8_t buf[2048];
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    const ssize_t n = ::recvfrom(fd_, buf, sizeof buf, MSG_DONTWAIT,
                                 reinterpret_cast<sockaddr*>(&sa), &len);
    if (n < 0) return std::nullopt;
    char host[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &sa.sin_addr, host, sizeof host);
    return Datagram{{host, ntohs(sa.sin_port)}, Bytes(buf, buf + n)};
  }

  bool waitUntil(Nanos deadline) override {
    if (fd_ < 0) return false;
    const Nanos now = clock_.now();
    const Nanos waitNs = deadline > now ? deadline - now : 0;
    pollfd pfd{fd_, POLLIN, 0};
    const int timeoutMs = static_cast<int>(waitNs / 1'000'000);
    return ::poll(&pfd, 1, timeoutMs) > 0 && (pfd.revents & POLLIN);
  }

  Address broadcastAddress() const override { return {"255.255.255.255", 0}; }

 private:
  const Clock& clock_;
  int fd_ = -1;
  Address local_;
};

}  // namespace wasisn::net
