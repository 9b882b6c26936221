#pragma once

#include <vector>

#include "core/flow.hpp"

namespace patchflow {

struct PicardResult {
  std::vector<double> distances;  // d_j = max_alpha |X^(j+1) - X^(j)| over the collocation nodes
  bool diverged = false;
  FlowState end;                  // last iterate at t + horizon
};

/// Chebyshev-Lobatto nodes on [0, 1] (count = nodes + 1, first 0, last 1).
std::vector<double> lobatto_nodes(int nodes);
/// S(i,k) = int_0^{u_i} L_k(u) du for the Lagrange basis on the nodes.
Mat integration_matrix(const std::vector<double>& u);

/// Picard iteration X^(j+1)(t+tau) = X(t) + int_t^{t+tau} F(X^(j)) on a
/// polynomial collocation grid, iterating the Jacobians together with the
/// positions. Stops after `iterations` or when d_j < tol. `start` may carry
/// the evaluation at s0 to avoid recomputing it.
PicardResult picard_iterate(const FlowState& s0, const FlowModel& m, double horizon, int iterations, int nodes,
                            JacobianMode mode, double tol = 0.0, const Evaluation* start = nullptr);

inline PicardResult picard_iterate(const FlowState& s0, const FlowModel& m, double horizon, int iterations, int nodes,
                                   JacobianMode mode, double tol, const Evaluation& start) {
  return picard_iterate(s0, m, horizon, iterations, nodes, mode, tol, &start);
}

}  // namespace patchflow
