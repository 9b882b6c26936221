#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "core/summation.hpp"

namespace patchflow {

/// Point sources in structure-of-arrays layout: pos[d * count + q].
struct SourceArrays {
  int n = 0;
  std::size_t count = 0;
  const double* pos = nullptr;
  const double* weight = nullptr;
  /// Squared radius per source below which it is left out of the velocity
  /// sums and reported in the near list instead. May be null.
  const double* near_r2 = nullptr;
};

struct PairSumOptions {
  Summation mode = Summation::pairwise_tree;
  /// Sources with |x - x_q|^2 <= pv_eps2 are left out of A and B.
  double pv_eps2 = 0.0;
  bool gradient = false;
};

/// Raw moments of a linear-profile kernel sum at one target x, d = x - x_q:
///   S_m  = sum w d_m |d|^-n                      (near sources masked)
///   A    = sum w |d|^-n                          (|d| > eps)
///   B_mi = sum w d_m d_i |d|^{-n-2}              (|d| > eps)
/// v = M S and d_i v_j = M_ji A - n sum_m M_jm B_mi recover the velocity and
/// the principal-value gradient of k(x) = M x |x|^-n. The source with d = 0
/// never contributes. Each quantity is reduced with blocks of 256 terms
/// combined by a pairwise tree (or sequentially), in source order.
struct Moments {
  std::vector<double> S, B;
  double A = 0.0;
  std::vector<std::uint32_t> near;
};

void linear_profile_moments(const SourceArrays& src, const double* x, const PairSumOptions& opt, Moments& out);

/// Generic blocked reduction: term(q, out) writes `width` contributions of
/// source q; returns the per-column reduced totals.
void reduce_terms(std::size_t count, int width, Summation mode,
                  const std::function<void(std::size_t, double*)>& term, double* total);

}  // namespace patchflow
