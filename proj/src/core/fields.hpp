#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace patchflow {

struct Box {
  std::vector<double> lo, hi;
  bool empty() const { return lo.empty(); }
  bool contains(const double* x, double tol = 0.0) const;
};

/// Compactly supported scalar samples. points holds count*n coordinates.
struct ScalarField {
  int n = 0;
  std::vector<double> points;
  std::vector<double> values;
  double h = 0.0;
  Box support_box;

  std::size_t size() const { return values.size(); }
  const double* point(std::size_t i) const { return &points[i * n]; }
  void update_support_box();
};

constexpr double kSupportThreshold = 1e-12;

/// Samples f at cell centers of the regular grid lo + h*(i + 1/2) covering [lo, hi].
/// With `sub` > 1 each value is the average of sub^n equally spaced samples in the cell.
ScalarField sample_grid_field(int n, const std::vector<double>& lo, const std::vector<double>& hi, double h,
                              const std::function<double(const double*)>& f, int sub = 1);

/// Samples f at the points of an existing field (same geometry, new values).
ScalarField resample(const ScalarField& like, const std::function<double(const double*)>& f);

using PairList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

/// Deterministic pair set: all pairs when they fit the budget, otherwise the
/// pairs closer than 3h (ordered by first then second index) followed by
/// seeded uniform far pairs. A larger budget always yields a superset.
PairList select_pairs(int n, const std::vector<double>& points, double h, std::size_t budget, std::uint64_t seed);

struct HolderEstimate {
  double sup_norm = 0.0;
  double seminorm_gamma = 0.0;
  double gamma = 0.0;
  std::size_t pair_budget = 0;
  std::size_t pairs_inspected = 0;
};

HolderEstimate estimate_holder(const ScalarField& f, double gamma, std::size_t pair_budget, std::uint64_t seed = 0);

/// max over the pair set of |f(x)-f(y)| / |x-y|^gamma.
double seminorm_on_pairs(int n, const std::vector<double>& points, const std::vector<double>& values,
                         const PairList& pairs, double gamma);

/// max over the pair set of |X(x)-X(y)| / |x-y|; X has `m` components per point.
double lipschitz_on_pairs(int n, const std::vector<double>& points, const std::vector<double>& mapped, int m,
                          const PairList& pairs);

/// Vector field sampled on a structured grid origin + h*i, i in [0, dims).
struct GridVectorField {
  int n = 0;                   // domain dimension
  int m = 0;                   // components
  std::vector<int> dims;
  std::vector<double> origin;
  double h = 0.0;
  std::vector<double> values;  // point-major, m values per point

  std::size_t size() const;
  std::size_t index(const int* multi) const;
  void point(std::size_t flat, double* x) const;
};

GridVectorField sample_grid_vector(int n, int m, const std::vector<double>& lo, const std::vector<double>& hi,
                                   double h, const std::function<void(const double*, double*)>& F);

struct GradNorms {
  double sup = 0.0;       // max_{i,j} |d_j F_i|
  double seminorm = 0.0;  // max_{i,j} |d_j F_i|_gamma
};

GradNorms estimate_grad_norms(const GridVectorField& F, double gamma, std::size_t pair_budget = 200000,
                              std::uint64_t seed = 0);

/// |F|_{1,gamma} = |F(0)| + ||grad F|| + |grad F|_gamma, F(0) by multilinear interpolation.
double norm_1_gamma(const GridVectorField& F, double gamma, std::size_t pair_budget = 200000, std::uint64_t seed = 0);

/// Multilinear interpolation of component c at x (clamped to the grid).
double interpolate(const GridVectorField& F, const double* x, int c);

/// sum of weights over samples with |value| > threshold; weights default to h^n.
double support_measure(const ScalarField& f, const std::vector<double>* weights = nullptr);

}  // namespace patchflow
