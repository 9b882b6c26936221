#include "core/inverse_flow.hpp"

#include <algorithm>
#include <cmath>

#include "core/determinant.hpp"
#include "core/errors.hpp"

namespace patchflow {

HistoryVelocity::HistoryVelocity(std::shared_ptr<const ParticleGeometry> geom, const FlowModel& m,
                                 const std::vector<Checkpoint>& history, JacobianMode mode)
    : geom_(std::move(geom)), m_(m), hist_(history), mode_(mode) {
  require(!history.empty(), "inverse flow needs at least one checkpoint");
  for (const auto& cp : history) times_.push_back(cp.t);
}

void HistoryVelocity::velocity(std::size_t k, double theta, const double* pts, std::size_t count, double* out) const {
  const int n = geom_->n;
  if (geom_->count() == 0) {
    std::fill(out, out + count * n, 0.0);
    return;
  }
  if (theta == 0.0 || theta == 1.0) {
    const Checkpoint& cp = hist_[theta == 0.0 ? k : k + 1];
    std::vector<double> det(geom_->count());
    for (std::size_t p = 0; p < det.size(); ++p) det[p] = det_small(&cp.DX[p * n * n], n);
    VelocityField f(*geom_, m_, cp.X.data(), cp.DX.data(), det.data(), cp.t);
    f.velocity(pts, count, out);
    return;
  }
  const Checkpoint& a = hist_[k];
  const Checkpoint& b = hist_[k + 1];
  const double dt = b.t - a.t;
  // Cubic Hermite basis.
  const double t = theta;
  const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
  const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
  std::vector<double> X(a.X.size()), DX(a.DX.size());
  for (std::size_t i = 0; i < X.size(); ++i)
    X[i] = h00 * a.X[i] + h10 * dt * a.V[i] + h01 * b.X[i] + h11 * dt * b.V[i];
  if (mode_ == JacobianMode::variational && !a.dDX.empty() && !b.dDX.empty()) {
    for (std::size_t i = 0; i < DX.size(); ++i)
      DX[i] = h00 * a.DX[i] + h10 * dt * a.dDX[i] + h01 * b.DX[i] + h11 * dt * b.dDX[i];
  } else {
    fit_jacobians(*geom_, X.data(), n, DX.data());
  }
  std::vector<double> det(geom_->count());
  for (std::size_t p = 0; p < det.size(); ++p) det[p] = det_small(&DX[p * n * n], n);
  VelocityField f(*geom_, m_, X.data(), DX.data(), det.data(), a.t + theta * dt);
  f.velocity(pts, count, out);
}

Box HistoryVelocity::support_box(std::size_t k) const {
  const int n = geom_->n;
  const Checkpoint& cp = hist_[k];
  Box b;
  if (geom_->count() == 0) return b;
  b.lo.assign(cp.X.begin(), cp.X.begin() + n);
  b.hi = b.lo;
  for (std::size_t p = 0; p < geom_->count(); ++p)
    for (int d = 0; d < n; ++d) {
      b.lo[d] = std::min(b.lo[d], cp.X[p * n + d]);
      b.hi[d] = std::max(b.hi[d], cp.X[p * n + d]);
    }
  return b;
}

void ConstantVelocity::velocity(std::size_t, double, const double*, std::size_t count, double* out) const {
  const std::size_t n = c_.size();
  for (std::size_t p = 0; p < count; ++p)
    for (std::size_t d = 0; d < n; ++d) out[p * n + d] = c_[d];
}

InverseFlowResult inverse_flow(const VelocitySource& v, const std::vector<double>& probes) {
  const int n = v.dimension();
  if (probes.size() % n != 0) fail(ErrorCode::dimension_mismatch, "probe array is not a multiple of n");
  const std::vector<double>& ts = v.times();
  require(!ts.empty(), "velocity source has no time grid");
  const std::size_t count = probes.size() / n;
  InverseFlowResult res;
  res.alpha = probes;
  res.left_support.assign(count, 0);
  std::vector<double> k1(probes.size()), k2(probes.size()), k3(probes.size()), k4(probes.size()), y(probes.size());
  auto mark = [&](std::size_t k, const std::vector<double>& pts) {
    const Box b = v.support_box(k);
    if (b.empty()) return;
    // One reference cell of slack would be kernel-specific; a box test is enough here.
    for (std::size_t p = 0; p < count; ++p)
      if (!b.contains(&pts[p * n], 1e-9)) res.left_support[p] = 1;
  };
  std::vector<double>& Y = res.alpha;
  mark(ts.size() - 1, Y);
  for (std::size_t k = ts.size() - 1; k-- > 0;) {
    const double h = ts[k] - ts[k + 1];  // negative for forward histories
    v.velocity(k, 1.0, Y.data(), count, k1.data());
    for (std::size_t i = 0; i < Y.size(); ++i) y[i] = Y[i] + 0.5 * h * k1[i];
    v.velocity(k, 0.5, y.data(), count, k2.data());
    for (std::size_t i = 0; i < Y.size(); ++i) y[i] = Y[i] + 0.5 * h * k2[i];
    v.velocity(k, 0.5, y.data(), count, k3.data());
    for (std::size_t i = 0; i < Y.size(); ++i) y[i] = Y[i] + h * k3[i];
    v.velocity(k, 0.0, y.data(), count, k4.data());
    for (std::size_t i = 0; i < Y.size(); ++i) Y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    mark(k, Y);
  }
  return res;
}

ScalarField transported_density(const ParticleGeometry& g, const InverseFlowResult& inv, const std::vector<double>& probes,
                                double probe_spacing) {
  const int n = g.n;
  const GridVectorField rho = g.density_grid();
  ScalarField f;
  f.n = n;
  f.h = probe_spacing;
  f.points = probes;
  const std::size_t count = probes.size() / n;
  f.values.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    const double* a = &inv.alpha[p * n];
    bool inside = true;
    for (int d = 0; d < n && inside; ++d)
      inside = a[d] >= rho.origin[d] && a[d] <= rho.origin[d] + rho.h * (rho.dims[d] - 1);
    f.values[p] = inside ? interpolate(rho, a, 0) : 0.0;
  }
  f.update_support_box();
  return f;
}

}  // namespace patchflow
