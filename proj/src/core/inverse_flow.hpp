#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/fields.hpp"
#include "core/flow.hpp"

namespace patchflow {

/// Time-dependent velocity known on a grid of checkpoint times.
class VelocitySource {
 public:
  virtual ~VelocitySource() = default;
  virtual int dimension() const = 0;
  virtual const std::vector<double>& times() const = 0;
  /// Velocity at `count` points at time t_k + theta (t_{k+1} - t_k), theta in {0, 1/2, 1}.
  virtual void velocity(std::size_t k, double theta, const double* pts, std::size_t count, double* out) const = 0;
  /// Box (lo, hi) of the sources at checkpoint k; empty when unbounded.
  virtual Box support_box(std::size_t) const { return {}; }
};

/// Velocity reconstructed from flow checkpoints. Between checkpoints the
/// positions (and, in variational mode, the Jacobians) are cubic Hermite
/// interpolants built from the stored rates; in finite-difference mode the
/// Jacobians are refitted from the interpolated positions.
class HistoryVelocity : public VelocitySource {
 public:
  HistoryVelocity(std::shared_ptr<const ParticleGeometry> geom, const FlowModel& m,
                  const std::vector<Checkpoint>& history, JacobianMode mode);
  int dimension() const override { return geom_->n; }
  const std::vector<double>& times() const override { return times_; }
  void velocity(std::size_t k, double theta, const double* pts, std::size_t count, double* out) const override;
  Box support_box(std::size_t k) const override;

 private:
  std::shared_ptr<const ParticleGeometry> geom_;
  const FlowModel& m_;
  const std::vector<Checkpoint>& hist_;
  JacobianMode mode_;
  std::vector<double> times_;
};

/// v(x, t) = c for all x and t, on the given time grid.
class ConstantVelocity : public VelocitySource {
 public:
  ConstantVelocity(std::vector<double> c, std::vector<double> times) : c_(std::move(c)), times_(std::move(times)) {}
  int dimension() const override { return static_cast<int>(c_.size()); }
  const std::vector<double>& times() const override { return times_; }
  void velocity(std::size_t, double, const double*, std::size_t count, double* out) const override;

 private:
  std::vector<double> c_;
  std::vector<double> times_;
};

struct InverseFlowResult {
  std::vector<double> alpha;        // X^{-1}(probe, t), count * n
  std::vector<char> left_support;   // probe left the source box of some checkpoint
  std::vector<std::string> flags;
};

/// Integrates dY/ds = v(Y, s) backwards from the last checkpoint time to the
/// first with RK4 on the checkpoint grid.
InverseFlowResult inverse_flow(const VelocitySource& v, const std::vector<double>& probes);

/// rho0(X^{-1}(probe, t)) by multilinear interpolation of the rho0 cell
/// averages on the reference lattice.
ScalarField transported_density(const ParticleGeometry& g, const InverseFlowResult& inv, const std::vector<double>& probes,
                                double probe_spacing);

}  // namespace patchflow
