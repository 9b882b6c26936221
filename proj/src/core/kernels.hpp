#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace patchflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Sphere profile of a custom kernel: writes g(s) (n values) for a unit vector s.
using SphereProfile = std::function<void(const double* s, double* g)>;

/// A kernel k: R^n \ {0} -> R^n, homogeneous of degree 1-n.
///
/// Builtins are all of the form k(x) = M x / |x|^n and keep M, which the
/// quadrature loops use directly. Custom kernels are given by their sphere
/// profile g and extended by k(x) = |x|^{1-n} g(x/|x|).
class KernelSpec {
 public:
  static KernelSpec linear_profile(std::string name, const Mat& M);
  static KernelSpec custom(std::string name, int n, SphereProfile g);

  int dimension() const { return n_; }
  const std::string& name() const { return name_; }
  bool has_linear_profile() const { return linear_.has_value(); }
  /// M such that k(x) = M x |x|^{-n}. Only valid if has_linear_profile().
  const Mat& profile_matrix() const { return *linear_; }

  void evaluate(const double* x, double* out) const;
  /// out(i,j) = d_i k_j, row-major n*n.
  void gradient(const double* x, double* out) const;
  /// out[(l*n + i)*n + j] = d_l d_i k_j.
  void hessian(const double* x, double* out) const;

  Vec evaluate(const Vec& x) const;
  Mat gradient(const Vec& x) const;
  std::vector<Mat> hessian(const Vec& x) const;

 private:
  KernelSpec() = default;
  void profile0(const double* x, double* out) const;  // g(x/|x|)
  void profile0_gradient(const double* x, double* out) const;

  int n_ = 0;
  std::string name_;
  std::optional<Mat> linear_;
  std::shared_ptr<const SphereProfile> profile_;
};

/// Area of the unit sphere S^{n-1}.
double sphere_area(int n);
/// Volume of the unit ball in R^n.
double ball_volume(int n);

/// name in {biot_savart, aggregation, mixed2d}; params holds (a, b) for
/// mixed2d and is ignored otherwise.
KernelSpec builtin_kernel(const std::string& name, int n, const std::vector<double>& params = {});

std::vector<std::string> builtin_kernel_names();

}  // namespace patchflow
