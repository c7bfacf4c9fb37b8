#include "ghostplan/error.hpp"

namespace ghostplan {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Range: return "range";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Divisibility: return "divisibility";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Undefined: return "undefined";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace ghostplan
