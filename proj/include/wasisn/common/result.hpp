#pragma once

#include <cassert>
#include <string_view>
#include <utility>
#include <variant>

namespace wasisn {

/// Error codes shared across the stack. Host-facing calls map a subset of
/// these onto negative ABI codes (see host/abi.hpp).
enum class Errc {
  Ok = 0,

  // sensors
  NotFound,
  Busy,
  ReadOnly,
  OutOfRange,
  BadEncoding,
  SensorStopped,
  BufferTooSmall,

  // network
  BindError,
  AlreadyStarted,
  Timeout,
  Refused,
  NotConnected,
  NoSuchSubscription,
  Empty,
  UnknownTopicId,
  RegistryFull,
  WildcardInName,

  // crypto / access control
  BadPattern,
  NotDelegable,
  MissingFreeSlot,
  CannotDecrypt,
  AuthenticationFailure,
  UnsealFailure,
  ParseError,
  PolicyDeny,
  BadSignature,
  UnknownAuthor,
  UnknownLeaf,
  AllRevoked,
  TooDeep,

  // sandbox
  Trap,
  PermissionDenied,
  UnknownHostFunction,

  // misc
  ConfigError,
  IoError,
};

constexpr std::string_view errcName(Errc e) {
  switch (e) {
    case Errc::Ok: return "Ok";
    case Errc::NotFound: return "NotFound";
    case Errc::Busy: return "Busy";
    case Errc::ReadOnly: return "ReadOnly";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::BadEncoding: return "BadEncoding";
    case Errc::SensorStopped: return "SensorStopped";
    case Errc::BufferTooSmall: return "BufferTooSmall";
    case Errc::BindError: return "BindError";
    case Errc::AlreadyStarted: return "AlreadyStarted";
    case Errc::Timeout: return "Timeout";
    case Errc::Refused: return "Refused";
    case Errc::NotConnected: return "NotConnected";
    case Errc::NoSuchSubscription: return "NoSuchSubscription";
    case Errc::Empty: return "Empty";
    case Errc::UnknownTopicId: return "UnknownTopicId";
    case Errc::RegistryFull: return "RegistryFull";
    case Errc::WildcardInName: return "WildcardInName";
    case Errc::BadPattern: return "BadPattern";
    case Errc::NotDelegable: return "NotDelegable";
    case Errc::MissingFreeSlot: return "MissingFreeSlot";
    case Errc::CannotDecrypt: return "CannotDecrypt";
    case Errc::AuthenticationFailure: return "AuthenticationFailure";
    case Errc::UnsealFailure: return "UnsealFailure";
    case Errc::ParseError: return "ParseError";
    case Errc::PolicyDeny: return "PolicyDeny";
    case Errc::BadSignature: return "BadSignature";
    case Errc::UnknownAuthor: return "UnknownAuthor";
    case Errc::UnknownLeaf: return "UnknownLeaf";
    case Errc::AllRevoked: return "AllRevoked";
    case Errc::TooDeep: return "TooDeep";
    case Errc::Trap: return "Trap";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::UnknownHostFunction: return "UnknownHostFunction";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "?";
}

/// Minimal expected-like carrier. GCC 11 has no std::expected, so the few
/// operations the stack needs are hand-rolled here.
template <typename T>
class Result {
 public:
  Result(T value) : state_(std::move(value)) {}  // NOLINT implicit by design
  Result(Errc error) : state_(error) { assert(error != Errc::Ok); }

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  Errc error() const { return ok() ? Errc::Ok : std::get<Errc>(state_); }

  T& value() & {
    assert(ok());
    return std::get<T>(state_);
  }
  const T& value() const& {
    assert(ok());
    return std::get<T>(state_);
  }
  T&& value() && {
    assert(ok());
    return std::get<T>(std::move(state_));
  }

  T valueOr(T fallback) const {
    return ok() ? std::get<T>(state_) : std::move(fallback);
  }

 private:
  std::variant<T, Errc> state_;
};

template <>
class Result<void> {
 public:
  Result() : error_(Errc::Ok) {}
  Result(Errc error) : error_(error) {}  // NOLINT implicit by design

  bool ok() const { return error_ == Errc::Ok; }
  explicit operator bool() const { return ok(); }
  Errc error() const { return error_; }

 private:
  Errc error_;
};

}  // namespace wasisn
