#include "ocugaze/error.hpp"

namespace ocugaze {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::parse: return "parse";
    case ErrorKind::unsupported_format: return "unsupported-format";
    case ErrorKind::extraction: return "extraction";
    case ErrorKind::localization: return "localization";
    case ErrorKind::landmark: return "landmark";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::diverged_training: return "diverged-training";
    case ErrorKind::split: return "split";
    case ErrorKind::io: return "io";
    case ErrorKind::device_unavailable: return "device-unavailable";
  }
  return "unknown";
}

}  // namespace ocugaze
