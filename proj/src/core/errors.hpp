#pragma once

#include <stdexcept>
#include <string>

namespace patchflow {

enum class ErrorCode {
  invalid_argument,
  unknown_kernel,
  dimension_mismatch,
  not_converged,
  orientation_lost,
  non_cz_kernel,
  io,
  config,
  internal,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when detDX <= 0 is met; carries the offending particle and time.
class OrientationLost : public Error {
 public:
  OrientationLost(std::size_t particle, double t, double det);
  std::size_t particle() const noexcept { return particle_; }
  double time() const noexcept { return t_; }

 private:
  std::size_t particle_;
  double t_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::invalid_argument, what);
}

}  // namespace patchflow
