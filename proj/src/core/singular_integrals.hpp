#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/fields.hpp"
#include "core/kernels.hpp"
#include "core/sphere.hpp"
#include "core/summation.hpp"

namespace patchflow {

struct QuadratureConfig {
  int pv_exclusion_cells = 1;
  Summation summation = Summation::pairwise_tree;
  int near_field_refinement = 4;

  /// Radius actually excluded around a singularity: half a cell per
  /// exclusion cell, so the neighbours at distance h are never cut.
  double exclusion_radius(double h) const { return 0.5 * pv_exclusion_cells * h; }
};

/// Output of the grid quadratures: `width` values per target.
struct QuadratureResult {
  int width = 0;
  std::vector<double> values;
  double epsilon = 0.0;
  std::vector<std::string> flags;
};

/// v(x) = sum_q k(x - x_q) f_q h^n over the cell-centred samples of f. Cells
/// within one cell of the target are split into r^n sub-cells, leaving out
/// the sub-cell(s) containing the target.
QuadratureResult convolve_T(const KernelSpec& k, const ScalarField& f, const std::vector<double>& targets,
                            const QuadratureConfig& cfg);

using ScalarKernel = std::function<double(const double*)>;

/// Checks that P has zero mean on the unit sphere. Throws non_cz_kernel if not.
void require_zero_sphere_mean(const ScalarKernel& P, int n);

/// Principal value sum over sources with |x - x_q| > eps. Consistent at sample
/// nodes; off-node targets keep an O(1) residue from the lattice asymmetry.
QuadratureResult convolve_S_pv(const ScalarKernel& P, const ScalarField& f, const std::vector<double>& targets,
                               const QuadratureConfig& cfg);

/// Full gradient d_i v_j at the targets: principal-value part plus c_ij f(x),
/// with f(x) taken from the sample cell containing x. width = n*n, (i,j) row-major.
/// Same node restriction as convolve_S_pv.
QuadratureResult velocity_gradient(const KernelSpec& k, const SphereIntegrals& si, const ScalarField& f,
                                   const std::vector<double>& targets, const QuadratureConfig& cfg);

/// p.v. sum of H(x - x_q) (g(x) - g(x_q)) f_q h^n, extrapolated in the
/// exclusion radius as 2 T_eps - T_2eps. Where g returns NaN it is replaced by
/// the mean of its values one cell away along the first usable axis and the
/// result is flagged.
QuadratureResult convolve_hypersingular(const ScalarKernel& H, const ScalarKernel& g, const ScalarField& f,
                                        const std::vector<double>& targets, const QuadratureConfig& cfg);

/// Sample value of f in the cell containing x (0 outside every cell).
double cell_value(const ScalarField& f, const double* x);

}  // namespace patchflow
