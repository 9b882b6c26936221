#include "core/directional.hpp"

#include <cmath>
#include <numeric>

#include "core/determinant.hpp"
#include "core/errors.hpp"
#include "core/flow.hpp"
#include "core/pairsum.hpp"
#include "core/parallel.hpp"

namespace patchflow {

namespace {

std::vector<std::size_t> all_or(const std::vector<std::size_t>& targets, std::size_t count) {
  if (!targets.empty()) return targets;
  std::vector<std::size_t> t(count);
  std::iota(t.begin(), t.end(), std::size_t{0});
  return t;
}

}  // namespace

std::vector<double> point_functional(const ParticleGeometry& g, const KernelSpec& k, const std::vector<double>& X,
                                     const std::vector<double>& DX, const std::vector<std::size_t>& targets,
                                     Summation mode) {
  const int n = g.n;
  if (k.dimension() != n) fail(ErrorCode::dimension_mismatch, "kernel and geometry dimensions differ");
  const std::size_t count = g.count();
  const std::vector<std::size_t> tg = all_or(targets, count);
  const double cell = std::pow(g.h, n);
  std::vector<double> w(count);
  for (std::size_t q = 0; q < count; ++q) w[q] = g.mass[q] * det_small(&DX[q * n * n], n) * cell;
  std::vector<double> out(tg.size() * n, 0.0);
  parallel_for(tg.size(), [&](std::size_t b, std::size_t e) {
    double d[16];
    for (std::size_t t = b; t < e; ++t) {
      const std::size_t p = tg[t];
      reduce_terms(
          count, n, mode,
          [&](std::size_t q, double* term) {
            if (q == p) {
              std::fill(term, term + n, 0.0);
              return;
            }
            for (int c = 0; c < n; ++c) d[c] = X[p * n + c] - X[q * n + c];
            k.evaluate(d, term);
            for (int c = 0; c < n; ++c) term[c] *= w[q];
          },
          &out[t * n]);
    }
  });
  return out;
}

std::vector<double> DirectionalResult::total() const {
  std::vector<double> t(I.size());
  for (std::size_t i = 0; i < I.size(); ++i) t[i] = I[i] + II[i];
  return t;
}

DirectionalResult directional_derivative(const FlowState& s, const KernelSpec& k, const std::vector<double>& Y,
                                         const std::vector<std::size_t>& targets, Summation mode) {
  const ParticleGeometry& g = *s.geom;
  const int n = g.n;
  if (k.dimension() != n) fail(ErrorCode::dimension_mismatch, "kernel and flow dimensions differ");
  if (Y.size() != s.X.size()) fail(ErrorCode::dimension_mismatch, "perturbation must have one vector per particle");
  const std::size_t count = g.count();
  const std::vector<std::size_t> tg = all_or(targets, count);
  const double cell = std::pow(g.h, n);

  DirectionalResult res;
  res.DY.assign(count * n * n, 0.0);
  if (count > 0) fit_jacobians(g, Y.data(), n, res.DY.data());
  std::vector<double> wI(count), wII(count);
  for (std::size_t q = 0; q < count; ++q) {
    wI[q] = g.mass[q] * det_small(&s.DX[q * n * n], n) * cell;
    wII[q] = g.mass[q] * det_derivative(&s.DX[q * n * n], &res.DY[q * n * n], n) * cell;
  }
  res.I.assign(tg.size() * n, 0.0);
  res.II.assign(tg.size() * n, 0.0);
  parallel_for(tg.size(), [&](std::size_t b, std::size_t e) {
    double d[16], grad[256], kv[16];
    std::vector<double> tot(2 * n);
    for (std::size_t t = b; t < e; ++t) {
      const std::size_t p = tg[t];
      reduce_terms(
          count, 2 * n, mode,
          [&](std::size_t q, double* term) {
            std::fill(term, term + 2 * n, 0.0);
            if (q == p) return;
            for (int c = 0; c < n; ++c) d[c] = s.X[p * n + c] - s.X[q * n + c];
            k.gradient(d, grad);
            k.evaluate(d, kv);
            for (int j = 0; j < n; ++j) {
              double dot = 0.0;
              for (int i = 0; i < n; ++i) dot += grad[i * n + j] * (Y[p * n + i] - Y[q * n + i]);
              term[j] = dot * wI[q];
              term[n + j] = kv[j] * wII[q];
            }
          },
          tot.data());
      for (int j = 0; j < n; ++j) {
        res.I[t * n + j] = tot[j];
        res.II[t * n + j] = tot[n + j];
      }
    }
  });
  return res;
}

std::vector<double> gateaux_difference(const FlowState& s, const KernelSpec& k, const std::vector<double>& Y,
                                       const std::vector<double>& DY, const std::vector<std::size_t>& targets,
                                       double eps, Summation mode) {
  require(eps > 0.0, "finite-difference step must be positive");
  auto shifted = [&](double e, std::vector<double>& X, std::vector<double>& DX) {
    X = s.X;
    DX = s.DX;
    for (std::size_t i = 0; i < X.size(); ++i) X[i] += e * Y[i];
    for (std::size_t i = 0; i < DX.size(); ++i) DX[i] += e * DY[i];
  };
  std::vector<double> Xp, DXp, Xm, DXm;
  shifted(eps, Xp, DXp);
  shifted(-eps, Xm, DXm);
  const std::vector<double> Fp = point_functional(*s.geom, k, Xp, DXp, targets, mode);
  const std::vector<double> Fm = point_functional(*s.geom, k, Xm, DXm, targets, mode);
  std::vector<double> out(Fp.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (Fp[i] - Fm[i]) / (2.0 * eps);
  return out;
}

}  // namespace patchflow
