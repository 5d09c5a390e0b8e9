#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigtrust {

enum class Errc {
  UnknownDevice,
  SelfRating,
  InvalidValue,
  NonMonotoneTimestamp,
  BlockedStart,
  GraphTooSmall,
  InvalidConfig,
  ZeroVector,
  StaleEmbeddings,
  TooFewDevices,
  ConfigMismatch,
  ConfigParseError,
  InvalidRange,
  MissingSeries,
  IoError,
  ParseError,
};

std::string_view to_string(Errc code) noexcept;

/// Every recoverable failure in the library surfaces as this type; `code()`
/// identifies the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sigtrust
