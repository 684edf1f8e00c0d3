#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acdkit {

enum class ErrorKind {
  NotFound,
  FormatError,
  IoError,
  DimensionMismatch,
  GridMismatch,
  MaskInconsistent,
  BadPatchSize,
  BadOffset,
  SingularCovariance,
  EmptyClass,
  BadConfig,
  UnknownScene,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Library error. what() reads "<Kind>: <message>" so the originating
/// error name survives when it is printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace acdkit
