#include "acdkit/error.hpp"

namespace acdkit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::MaskInconsistent: return "MaskInconsistent";
    case ErrorKind::BadPatchSize: return "BadPatchSize";
    case ErrorKind::BadOffset: return "BadOffset";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::UnknownScene: return "UnknownScene";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(message) {}

}  // namespace acdkit
