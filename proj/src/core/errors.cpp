#include "core/errors.hpp"

#include <sstream>

namespace patchflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unknown_kernel: return "unknown_kernel";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::orientation_lost: return "orientation_lost";
    case ErrorCode::non_cz_kernel: return "non_cz_kernel";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

static std::string orientation_message(std::size_t particle, double t, double det) {
  std::ostringstream os;
  os << "detDX <= 0 at particle " << particle << " (t = " << t << ", det = " << det << ")";
  return os.str();
}

OrientationLost::OrientationLost(std::size_t particle, double t, double det)
    : Error(ErrorCode::orientation_lost, orientation_message(particle, t, det)),
      particle_(particle),
      t_(t) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace patchflow
