#include "smi/error.hpp"

namespace smi {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config error";
    case ErrorKind::format: return "format error";
    case ErrorKind::data: return "data error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::index: return "index error";
    case ErrorKind::lookup: return "lookup error";
    case ErrorKind::capacity: return "capacity error";
    case ErrorKind::argument: return "argument error";
    case ErrorKind::consistency: return "consistency error";
    case ErrorKind::provider: return "provider error";
    case ErrorKind::numerical: return "numerical error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
      return 2;
    case ErrorKind::numerical:
      return 4;
    default:
      return 3;
  }
}

}  // namespace smi
