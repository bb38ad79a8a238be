#include "bohmlab/error.hpp"

namespace bohmlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::domain: return "domain";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::grid_mismatch: return "grid_mismatch";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::conditional_undefined: return "conditional_undefined";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::disjointness: return "disjointness";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::unknown_scenario: return "unknown_scenario";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
      kind_(kind) {}

}  // namespace bohmlab
