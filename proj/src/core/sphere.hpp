#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/kernels.hpp"

namespace patchflow {

/// Quadrature nodes and weights on S^{n-1}. The weights sum to the sphere area.
/// Every rule is closed under s -> -s.
struct SphereRule {
  int n = 0;
  std::vector<double> points;  // count * n
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};

/// n = 2: trapezoid on uniform angles; n = 3: Gauss-Legendre in cos(theta)
/// times trapezoid in azimuth. Both use at least `nodes` points.
SphereRule deterministic_sphere_rule(int n, int nodes);

/// Randomly shifted Halton points pushed to the sphere through the normal
/// quantile, with antipodal pairs. One replica of a randomized QMC estimate.
SphereRule qmc_sphere_rule(int n, int nodes, std::uint64_t seed);

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
void gauss_legendre(int p, std::vector<double>& x, std::vector<double>& w);

/// Integrates a vector-valued f over S^{n-1}. f(s, out) writes `width` values.
/// For n >= 4 the estimate is the mean over `replicas` QMC rules and
/// `stat_error` (if given) receives the componentwise max standard error.
std::vector<double> integrate_sphere(int n, int nodes, int width,
                                     const std::function<void(const double*, double*)>& f,
                                     double* stat_error = nullptr);

struct SphereIntegrals {
  int n = 0;
  Mat c;                            // c(i,j) = int k_j(s) s_i
  std::vector<double> xi;           // xi[((k*n + i)*n + j)*n + l] = int d_i k_j(a) a_k a_l
  Mat zero_mean_residual;           // |int d_i k_j|
  int quadrature_nodes = 0;         // nodes actually used
  double refinement_change = 0.0;   // max change when doubling the node count
  double statistical_error = 0.0;   // QMC standard error (0 for n <= 3)
  double tolerance = 0.0;           // convergence tolerance that was applied

  double xi_at(int k, int i, int j, int l) const { return xi[((k * n + i) * n + j) * n + l]; }
};

int default_sphere_nodes(int n);

/// Computes the sphere constants of k, checking convergence by doubling the
/// node count. Throws not_converged if the change exceeds the tolerance
/// (1e-8, or four standard errors for the QMC rule).
SphereIntegrals sphere_integrals(const KernelSpec& k, int nodes);

/// trace(c), the coefficient of rho in div v.
double divergence_constant(const SphereIntegrals& si);

/// max_{|s| = 1} |k(s)| over a sphere rule.
double kernel_sphere_max(const KernelSpec& k, int nodes);

/// Writes a matrix as CSV, one row per i, 17 significant digits.
void write_matrix_csv(const std::string& path, const Mat& m);

}  // namespace patchflow
