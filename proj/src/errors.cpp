#include "hetlb/errors.hpp"

namespace hetlb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return "invalid config";
    case ErrorKind::DegenerateGeometry: return "degenerate geometry";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::ContractViolation: return "contract violation";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::SizeGuard: return "size guard";
    case ErrorKind::InvalidPrediction: return "invalid prediction";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::ModelMismatch: return "model mismatch";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
  }
  return "error";
}

}  // namespace hetlb
