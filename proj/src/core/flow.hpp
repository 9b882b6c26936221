#pragma once

#include <optional>
#include <vector>

#include "core/flow_state.hpp"
#include "core/kernels.hpp"
#include "core/pairsum.hpp"
#include "core/singular_integrals.hpp"

namespace patchflow {

/// Kernel, its sphere constants and the quadrature settings of a run.
struct FlowModel {
  KernelSpec kernel;
  Mat c;  // c(i,j) = int k_j(s) s_i
  QuadratureConfig quad;
  /// Sub-cell quadrature is used for a source cell when the target's
  /// reference offset from the cell center is below `blend_outer` cells (max
  /// norm), blended with the point term down to `blend_inner` cells.
  double blend_inner = 0.5;
  double blend_outer = 1.0;
  /// Radius (in sub-cells) of the reference ball left out around the target;
  /// leaves are ramped back in over the next quarter sub-cell.
  double subcell_exclusion = 0.25;
  /// Extra 2^n splits of the sub-cells touching the target.
  int near_depth = 2;
};

FlowModel make_model(const KernelSpec& k, const Mat& c, const QuadratureConfig& q);

/// Velocity field of one particle configuration (X, DX, det).
///
/// A source q contributes k(x - X_q) w_q with w_q = mass_q det_q h^n. Near a
/// source its cell is split into r^n sub-cells mapped by the linearised flow
/// X_q + DX_q^T (alpha - marker) and carrying the sub-cell averages of rho0.
class VelocityField {
 public:
  VelocityField(const ParticleGeometry& g, const FlowModel& m, const double* X, const double* DX, const double* det,
                double t);

  /// Velocity at arbitrary points (count * n).
  void velocity(const double* targets, std::size_t count, double* out) const;
  /// Velocity and d_i v_j at the particles: c_ij rho0_p plus the principal
  /// value sum over sources with |X_p - X_q| > eps.
  void particle_velocity_gradient(double* V, double* G) const;

  double epsilon() const { return eps_; }

 private:
  void at_target(const double* x, double* v, double* G, double rho_c, Moments& mo) const;
  struct Cell {
    const double* delta;   // target in reference coordinates relative to the cell center
    const double* off;     // marker offset
    const double* dx;      // target - X_q
    const double* D;       // DX_q
    const double* center;  // cell center in alpha; null: split content uniformly
    double det;
  };
  /// Near-field quadrature points: displacement target - point and weight.
  struct Leaves {
    std::vector<double> y, w;
    void push(const double* d, int n, double weight) {
      y.insert(y.end(), d, d + n);
      w.push_back(weight);
    }
  };
  void subcell(const Cell& c, const double* geo, const double* at, double a, int depth, double w, double frac,
               Leaves& out) const;
  void sum_leaves(Leaves& leaves, double* v) const;

  const ParticleGeometry& g_;
  const FlowModel& m_;
  int n_;
  std::size_t count_;
  const double* X_;
  const double* DX_;
  const double* det_;
  std::vector<double> pos_;  // SoA
  std::vector<double> weight_;
  std::vector<double> near_r2_;
  std::vector<double> dxinvT_;  // per particle n*n, DX^{-T}
  double eps_ = 0.0;
};

struct Evaluation {
  std::vector<double> V;   // particles, count * n
  std::vector<double> G;   // particles, count * n * n, G(i,j) = d_i v_j; empty if not computed
  std::vector<double> VT;  // tracers
};

Evaluation evaluate(const FlowState& s, const FlowModel& m, bool gradient);

/// v(x) at arbitrary targets for the state s.
std::vector<double> velocity_from_state(const FlowState& s, const FlowModel& m, const std::vector<double>& targets);

/// Least-squares Jacobian of a per-particle map Y (m components) over the
/// 3^n lattice neighbours: out(i,j) = dY_j / dalpha_i, count * n * m.
void fit_jacobians(const ParticleGeometry& g, const double* Y, int m, double* out);

/// dDX/dt = DX G for every particle.
void jacobian_rate(std::size_t count, int n, const double* DX, const double* G, double* out);

struct Checkpoint {
  double t = 0.0;
  std::vector<double> X, DX, V, dDX;
};

/// Time stepper with the stage-1 evaluation cached between steps.
class Flow {
 public:
  Flow(FlowState s, FlowModel m, TimeIntegratorConfig cfg, bool keep_history = false);

  const FlowState& state() const { return s_; }
  const FlowModel& model() const { return m_; }
  const TimeIntegratorConfig& config() const { return cfg_; }

  /// Evaluation (with gradients) at the current state.
  const Evaluation& current();
  void step();
  void advance(int steps);

  /// Checkpoints at every step including the current state.
  const std::vector<Checkpoint>& history();
  bool keeps_history() const { return keep_history_; }

 private:
  FlowState stage_state(const std::vector<double>& X, const std::vector<double>* DX,
                        const std::vector<double>& T, double t) const;
  Evaluation stage_eval(const FlowState& st) const;
  void rk_step(bool rk4);
  void picard_step();
  void commit(FlowState next);

  FlowState s_;
  FlowModel m_;
  TimeIntegratorConfig cfg_;
  bool keep_history_;
  std::optional<Evaluation> cur_;
  std::vector<Checkpoint> history_;
};

}  // namespace patchflow
