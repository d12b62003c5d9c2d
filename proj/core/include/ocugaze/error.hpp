#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ocugaze {

enum class ErrorKind {
  dimension,
  parameter,
  precondition,
  parse,
  unsupported_format,
  extraction,
  localization,
  landmark,
  configuration,
  diverged_training,
  split,
  io,
  device_unavailable,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ocugaze
