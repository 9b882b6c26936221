#include "core/picard.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/errors.hpp"

namespace patchflow {

std::vector<double> lobatto_nodes(int nodes) {
  require(nodes >= 1, "need at least one Picard interval");
  std::vector<double> u(nodes + 1);
  for (int k = 0; k <= nodes; ++k) u[k] = 0.5 * (1.0 - std::cos(std::numbers::pi * k / nodes));
  u.front() = 0.0;
  u.back() = 1.0;
  return u;
}

Mat integration_matrix(const std::vector<double>& u) {
  const int m = static_cast<int>(u.size());
  Mat V(m, m), W(m, m);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < m; ++p) {
      V(i, p) = std::pow(u[i], p);
      W(i, p) = std::pow(u[i], p + 1) / (p + 1);
    }
  // L_k(u) = sum_p A(p,k) u^p with A = V^{-1}.
  const Mat A = V.fullPivLu().inverse();
  return W * A;
}

PicardResult picard_iterate(const FlowState& s0, const FlowModel& m, double horizon, int iterations, int nodes,
                            JacobianMode mode, double tol, const Evaluation* start) {
  require(std::isfinite(horizon) && horizon != 0.0, "Picard horizon must be nonzero");
  require(iterations >= 1, "Picard needs at least one iteration");
  const int n = s0.n();
  const std::vector<double> u = lobatto_nodes(nodes);
  const Mat S = integration_matrix(u) * horizon;
  const int K = static_cast<int>(u.size());
  const bool var = mode == JacobianMode::variational;
  const std::size_t nX = s0.X.size(), nD = s0.DX.size(), nT = s0.tracer_X.size();

  std::vector<FlowState> iter(K, s0);
  for (int k = 0; k < K; ++k) iter[k].t = s0.t + u[k] * horizon;

  std::vector<std::vector<double>> rX(K), rD(K), rT(K);
  auto rates = [&](int k, const Evaluation& e) {
    rX[k] = e.V;
    rT[k] = e.VT;
    if (var) {
      rD[k].resize(nD);
      jacobian_rate(iter[k].count(), n, iter[k].DX.data(), e.G.data(), rD[k].data());
    }
  };
  rates(0, start ? *start : evaluate(s0, m, var));

  PicardResult res;
  int growth = 0;
  for (int j = 0; j < iterations; ++j) {
    for (int k = 1; k < K; ++k) rates(k, evaluate(iter[k], m, var));
    std::vector<FlowState> next(K, s0);
    double dist = 0.0;
    for (int i = 0; i < K; ++i) {
      FlowState& st = next[i];
      st.t = s0.t + u[i] * horizon;
      for (int k = 0; k < K; ++k) {
        const double w = S(i, k);
        if (w == 0.0) continue;
        for (std::size_t a = 0; a < nX; ++a) st.X[a] += w * rX[k][a];
        for (std::size_t a = 0; a < nT; ++a) st.tracer_X[a] += w * rT[k][a];
        if (var)
          for (std::size_t a = 0; a < nD; ++a) st.DX[a] += w * rD[k][a];
      }
      if (!var && st.count() > 0) fit_jacobians(*st.geom, st.X.data(), n, st.DX.data());
      st.refresh_det();
      for (std::size_t p = 0; p < st.count(); ++p) {
        double d2 = 0.0;
        for (int c = 0; c < n; ++c) {
          const double e = st.X[p * n + c] - iter[i].X[p * n + c];
          d2 += e * e;
        }
        dist = std::max(dist, std::sqrt(d2));
      }
    }
    iter.swap(next);
    if (!res.distances.empty() && dist > res.distances.back()) {
      if (++growth >= 3) res.diverged = true;
    } else {
      growth = 0;
    }
    res.distances.push_back(dist);
    if (res.diverged || dist < tol) break;
  }
  res.end = iter.back();
  res.end.step = s0.step;
  return res;
}

}  // namespace patchflow
