#include "awm/errors.hpp"

namespace awm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Quadrature: return "quadrature";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::CompressionLimit: return "compression_limit";
    case ErrorKind::Spectral: return "spectral";
    case ErrorKind::DataResolution: return "data_resolution";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::Assembly: return "assembly";
    case ErrorKind::Stagnation: return "stagnation";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace awm
