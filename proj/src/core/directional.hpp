#pragma once

#include <vector>

#include "core/flow_state.hpp"
#include "core/kernels.hpp"
#include "core/summation.hpp"

namespace patchflow {

/// Point-sum functional on the particles:
///   F(X, DX)_p = sum_{q != p} k(X_p - X_q) mass_q det(DX_q) h^n
/// evaluated at the particles listed in `targets` (all when empty).
std::vector<double> point_functional(const ParticleGeometry& g, const KernelSpec& k, const std::vector<double>& X,
                                     const std::vector<double>& DX, const std::vector<std::size_t>& targets,
                                     Summation mode = Summation::pairwise_tree);

struct DirectionalResult {
  std::vector<double> I, II;  // per target, n components
  std::vector<double> DY;     // fitted dY_j/dalpha_i per particle, count*n*n
  std::vector<double> total() const;
};

/// F'(X)Y = I + II with
///   I_p  = sum_q grad k(X_p - X_q) . (Y_p - Y_q) mass_q det(DX_q) h^n
///   II_p = sum_q k(X_p - X_q) mass_q h^n sum_{r,s} (-1)^{r+s} dY_q(r,s) det(DX_q^c(r,s))
/// DY is the lattice least-squares fit of Y. The difference factor in I keeps
/// the near terms bounded, so no exclusion is applied beyond q != p.
DirectionalResult directional_derivative(const FlowState& s, const KernelSpec& k, const std::vector<double>& Y,
                                         const std::vector<std::size_t>& targets,
                                         Summation mode = Summation::pairwise_tree);

/// Central difference (F(X + eps Y, DX + eps DY) - F(X - eps Y, DX - eps DY)) / (2 eps)
/// with the same fitted DY.
std::vector<double> gateaux_difference(const FlowState& s, const KernelSpec& k, const std::vector<double>& Y,
                                       const std::vector<double>& DY, const std::vector<std::size_t>& targets,
                                       double eps, Summation mode = Summation::pairwise_tree);

}  // namespace patchflow
