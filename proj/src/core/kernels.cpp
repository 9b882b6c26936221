#include "core/kernels.hpp"

#include <cmath>
#include <numbers>

#include "core/errors.hpp"

namespace patchflow {

double sphere_area(int n) { return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n); }

double ball_volume(int n) { return sphere_area(n) / n; }

KernelSpec KernelSpec::linear_profile(std::string name, const Mat& M) {
  require(M.rows() == M.cols() && M.rows() >= 2 && M.rows() <= 16,
          "profile matrix must be square with 2 <= n <= 16");
  KernelSpec k;
  k.n_ = static_cast<int>(M.rows());
  k.name_ = std::move(name);
  k.linear_ = M;
  return k;
}

KernelSpec KernelSpec::custom(std::string name, int n, SphereProfile g) {
  require(n >= 2 && n <= 16, "kernel dimension must be in [2, 16]");
  require(static_cast<bool>(g), "custom kernel needs a sphere profile");
  KernelSpec k;
  k.n_ = n;
  k.name_ = std::move(name);
  k.profile_ = std::make_shared<const SphereProfile>(std::move(g));
  return k;
}

namespace {

double norm2(const double* x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void require_nonzero(double r2) {
  if (!(r2 > 0.0)) fail(ErrorCode::invalid_argument, "kernel evaluated at the origin");
}

}  // namespace

void KernelSpec::profile0(const double* x, double* out) const {
  const double r = std::sqrt(norm2(x, n_));
  double s[16];
  for (int i = 0; i < n_; ++i) s[i] = x[i] / r;
  (*profile_)(s, out);
}

// Jacobian of the 0-homogeneous extension G(x) = g(x/|x|), out(i,j) = d_i G_j.
// Central differences with a step relative to |x|.
void KernelSpec::profile0_gradient(const double* x, double* out) const {
  const int n = n_;
  const double step = 1e-5 * std::sqrt(norm2(x, n));
  double xp[16], gp[16], gm[16];
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < n; ++m) xp[m] = x[m];
    xp[i] = x[i] + step;
    profile0(xp, gp);
    xp[i] = x[i] - step;
    profile0(xp, gm);
    for (int j = 0; j < n; ++j) out[i * n + j] = (gp[j] - gm[j]) / (2.0 * step);
  }
}

void KernelSpec::evaluate(const double* x, double* out) const {
  const int n = n_;
  const double r2 = norm2(x, n);
  require_nonzero(r2);
  const double rmn = std::pow(r2, -0.5 * n);
  if (linear_) {
    const Mat& M = *linear_;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += M(j, m) * x[m];
      out[j] = s * rmn;
    }
    return;
  }
  profile0(x, out);
  const double scale = rmn * std::sqrt(r2);
  for (int j = 0; j < n; ++j) out[j] *= scale;
}

void KernelSpec::gradient(const double* x, double* out) const {
  const int n = n_;
  const double r2 = norm2(x, n);
  require_nonzero(r2);
  const double rmn = std::pow(r2, -0.5 * n);
  if (linear_) {
    const Mat& M = *linear_;
    double Mx[16];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += M(j, m) * x[m];
      Mx[j] = s;
    }
    const double rmn2 = rmn / r2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] = M(j, i) * rmn - n * Mx[j] * x[i] * rmn2;
    return;
  }
  double G[16], dG[256];
  profile0(x, G);
  profile0_gradient(x, dG);
  const double r = std::sqrt(r2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[i * n + j] = (1.0 - n) * rmn * (x[i] / r) * G[j] + rmn * r * dG[i * n + j];
}

void KernelSpec::hessian(const double* x, double* out) const {
  const int n = n_;
  const double r2 = norm2(x, n);
  require_nonzero(r2);
  if (linear_) {
    const Mat& M = *linear_;
    const double rmn = std::pow(r2, -0.5 * n);
    const double rmn2 = rmn / r2;
    const double rmn4 = rmn2 / r2;
    double Mx[16];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += M(j, m) * x[m];
      Mx[j] = s;
    }
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = -n * M(j, i) * x[l] * rmn2 - n * M(j, l) * x[i] * rmn2 +
                     static_cast<double>(n) * (n + 2) * Mx[j] * x[i] * x[l] * rmn4;
          if (i == l) v -= n * Mx[j] * rmn2;
          out[(l * n + i) * n + j] = v;
        }
    return;
  }
  const double step = 1e-4 * std::sqrt(r2);
  double xp[16], gp[256], gm[256];
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) xp[m] = x[m];
    xp[l] = x[l] + step;
    gradient(xp, gp);
    xp[l] = x[l] - step;
    gradient(xp, gm);
    for (int ij = 0; ij < n * n; ++ij) out[l * n * n + ij] = (gp[ij] - gm[ij]) / (2.0 * step);
  }
}

Vec KernelSpec::evaluate(const Vec& x) const {
  if (x.size() != n_) fail(ErrorCode::dimension_mismatch, "point dimension does not match kernel");
  Vec out(n_);
  evaluate(x.data(), out.data());
  return out;
}

Mat KernelSpec::gradient(const Vec& x) const {
  if (x.size() != n_) fail(ErrorCode::dimension_mismatch, "point dimension does not match kernel");
  std::vector<double> buf(n_ * n_);
  gradient(x.data(), buf.data());
  Mat out(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out(i, j) = buf[i * n_ + j];
  return out;
}

std::vector<Mat> KernelSpec::hessian(const Vec& x) const {
  if (x.size() != n_) fail(ErrorCode::dimension_mismatch, "point dimension does not match kernel");
  std::vector<double> buf(n_ * n_ * n_);
  hessian(x.data(), buf.data());
  std::vector<Mat> out(n_, Mat(n_, n_));
  for (int l = 0; l < n_; ++l)
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) out[l](i, j) = buf[(l * n_ + i) * n_ + j];
  return out;
}

namespace {

Mat aggregation_matrix(int n) { return -Mat::Identity(n, n) / sphere_area(n); }

Mat biot_savart_matrix() {
  Mat M = Mat::Zero(2, 2);
  M(0, 1) = -0.5 / std::numbers::pi;
  M(1, 0) = 0.5 / std::numbers::pi;
  return M;
}

}  // namespace

KernelSpec builtin_kernel(const std::string& name, int n, const std::vector<double>& params) {
  if (name == "biot_savart") {
    if (n != 2) fail(ErrorCode::dimension_mismatch, "biot_savart is defined for n = 2 only");
    return KernelSpec::linear_profile(name, biot_savart_matrix());
  }
  if (name == "aggregation") {
    if (n < 2 || n > 16) fail(ErrorCode::dimension_mismatch, "aggregation needs 2 <= n <= 16");
    return KernelSpec::linear_profile(name, aggregation_matrix(n));
  }
  if (name == "mixed2d") {
    if (n != 2) fail(ErrorCode::dimension_mismatch, "mixed2d is defined for n = 2 only");
    if (params.size() != 2) fail(ErrorCode::invalid_argument, "mixed2d needs parameters a and b");
    return KernelSpec::linear_profile(name, params[0] * aggregation_matrix(2) + params[1] * biot_savart_matrix());
  }
  fail(ErrorCode::unknown_kernel, "unknown kernel '" + name + "'");
}

std::vector<std::string> builtin_kernel_names() { return {"biot_savart", "aggregation", "mixed2d"}; }

}  // namespace patchflow
