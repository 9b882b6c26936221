#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/lattice.hpp"

namespace patchflow {

enum class Scheme { rk4, euler, picard };
enum class JacobianMode { variational, finite_difference };

struct TimeIntegratorConfig {
  double dt = 0.01;
  Scheme scheme = Scheme::rk4;
  int picard_iterations = 8;
  int picard_nodes = 5;
  JacobianMode jacobian_mode = JacobianMode::variational;
};

void validate(const TimeIntegratorConfig& cfg);

/// Particle positions and Jacobians on a fixed reference geometry.
/// DX is stored per particle as a row-major n*n block with
/// DX(i,j) = dX_j / dalpha_i. Tracers are passive points advected by the
/// same velocity; they carry no mass.
struct FlowState {
  std::shared_ptr<const ParticleGeometry> geom;
  double t = 0.0;
  long step = 0;
  std::vector<double> X;
  std::vector<double> DX;
  std::vector<double> det;
  std::vector<double> tracer_alpha;
  std::vector<double> tracer_X;

  int n() const { return geom->n; }
  double h() const { return geom->h; }
  std::size_t count() const { return geom->count(); }
  std::size_t tracers() const { return tracer_X.size() / geom->n; }
  const std::vector<double>& alpha() const { return geom->alpha; }
  const std::vector<double>& rho0() const { return geom->rho0; }

  /// X = alpha, DX = I, det = 1 at time t = 0.
  static FlowState initial(std::shared_ptr<const ParticleGeometry> geom, const std::vector<double>& tracers = {});

  /// Recomputes det from DX; throws OrientationLost on det <= 0.
  void refresh_det();
  /// max_p |det(DX_p) - det_p|.
  double det_consistency() const;
};

}  // namespace patchflow
