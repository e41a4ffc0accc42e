#include "gibbscal/errors.hpp"

namespace gibbscal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Structural: return "structural";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Data: return "data";
    case ErrorKind::Initialization: return "initialization";
    case ErrorKind::Optimization: return "optimization";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::Tuning: return "tuning";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace gibbscal
