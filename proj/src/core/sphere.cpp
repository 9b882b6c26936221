#include "core/sphere.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "core/errors.hpp"
#include "core/summation.hpp"

namespace patchflow {

void gauss_legendre(int p, std::vector<double>& x, std::vector<double>& w) {
  require(p >= 1, "Gauss-Legendre order must be positive");
  Mat J = Mat::Zero(p, p);
  for (int k = 1; k < p; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  x.resize(p);
  w.resize(p);
  for (int i = 0; i < p; ++i) {
    x[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    w[i] = 2.0 * v * v;
  }
  // Symmetrize so the node set is exactly closed under x -> -x.
  for (int i = 0; i < p / 2; ++i) {
    const double xs = 0.5 * (x[p - 1 - i] - x[i]);
    const double ws = 0.5 * (w[i] + w[p - 1 - i]);
    x[i] = -xs;
    x[p - 1 - i] = xs;
    w[i] = ws;
    w[p - 1 - i] = ws;
  }
  if (p % 2 == 1) x[p / 2] = 0.0;
}

SphereRule deterministic_sphere_rule(int n, int nodes) {
  require(nodes >= 1, "node count must be positive");
  SphereRule rule;
  rule.n = n;
  if (n == 2) {
    const int m = nodes + (nodes % 2);
    rule.points.resize(2 * m);
    rule.weights.assign(m, 2.0 * std::numbers::pi / m);
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * k / m;
      rule.points[2 * k] = std::cos(th);
      rule.points[2 * k + 1] = std::sin(th);
    }
    // Exact antipodes: the second half mirrors the first.
    for (int k = m / 2; k < m; ++k) {
      rule.points[2 * k] = -rule.points[2 * (k - m / 2)];
      rule.points[2 * k + 1] = -rule.points[2 * (k - m / 2) + 1];
    }
    return rule;
  }
  if (n == 3) {
    const int p = std::max(2, static_cast<int>(std::ceil(std::sqrt(nodes / 2.0))));
    const int q = 2 * p;
    std::vector<double> z, wz;
    gauss_legendre(p, z, wz);
    rule.points.reserve(3 * p * q);
    rule.weights.reserve(p * q);
    std::vector<double> cs(q), sn(q);
    for (int m = 0; m < q; ++m) {
      const double ph = 2.0 * std::numbers::pi * m / q;
      cs[m] = std::cos(ph);
      sn[m] = std::sin(ph);
    }
    for (int m = p; m < q; ++m) {
      cs[m] = -cs[m - p];
      sn[m] = -sn[m - p];
    }
    for (int i = 0; i < p; ++i) {
      const double rho = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
      for (int m = 0; m < q; ++m) {
        rule.points.push_back(rho * cs[m]);
        rule.points.push_back(rho * sn[m]);
        rule.points.push_back(z[i]);
        rule.weights.push_back(wz[i] * 2.0 * std::numbers::pi / q);
      }
    }
    return rule;
  }
  fail(ErrorCode::invalid_argument, "deterministic sphere rule exists for n = 2, 3 only");
}

namespace {

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr int kPrimes[16] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

SphereRule qmc_sphere_rule(int n, int nodes, std::uint64_t seed) {
  require(n >= 2 && n <= 16, "QMC sphere rule needs 2 <= n <= 16");
  const int half = std::max(1, nodes / 2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(n);
  for (auto& s : shift) s = unif(rng);
  const boost::math::normal_distribution<double> normal;
  SphereRule rule;
  rule.n = n;
  rule.points.resize(2 * half * n);
  rule.weights.assign(2 * half, sphere_area(n) / (2 * half));
  std::vector<double> g(n);
  for (int k = 0; k < half; ++k) {
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
      double u = radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[d]) + shift[d];
      u -= std::floor(u);
      u = std::clamp(u, 1e-15, 1.0 - 1e-15);
      g[d] = boost::math::quantile(normal, u);
      r2 += g[d] * g[d];
    }
    const double r = std::sqrt(r2);
    for (int d = 0; d < n; ++d) {
      rule.points[k * n + d] = g[d] / r;
      rule.points[(half + k) * n + d] = -g[d] / r;
    }
  }
  return rule;
}

namespace {

// Blocked integration: sequential within blocks of 64 nodes, pairwise tree
// across block totals, so the result does not depend on how blocks are
// scheduled.
std::vector<double> integrate_rule(const SphereRule& rule, int width,
                                   const std::function<void(const double*, double*)>& f) {
  constexpr std::size_t kBlock = 64;
  const std::size_t count = rule.size();
  const std::size_t nblocks = (count + kBlock - 1) / kBlock;
  std::vector<double> blocks(nblocks * width, 0.0);
  std::vector<double> val(width);
  for (std::size_t b = 0; b < nblocks; ++b) {
    double* acc = &blocks[b * width];
    for (std::size_t q = b * kBlock; q < std::min(count, (b + 1) * kBlock); ++q) {
      f(&rule.points[q * rule.n], val.data());
      for (int c = 0; c < width; ++c) acc[c] += rule.weights[q] * val[c];
    }
  }
  std::vector<double> out(width);
  std::vector<double> column(nblocks);
  for (int c = 0; c < width; ++c) {
    for (std::size_t b = 0; b < nblocks; ++b) column[b] = blocks[b * width + c];
    out[c] = pairwise_sum(column);
  }
  return out;
}

constexpr int kReplicas = 8;
constexpr std::uint64_t kQmcSeed = 0x5eed5eedULL;

}  // namespace

std::vector<double> integrate_sphere(int n, int nodes, int width,
                                     const std::function<void(const double*, double*)>& f,
                                     double* stat_error) {
  if (n <= 3) {
    if (stat_error) *stat_error = 0.0;
    return integrate_rule(deterministic_sphere_rule(n, nodes), width, f);
  }
  const int per = std::max(2, nodes / kReplicas);
  std::vector<std::vector<double>> est;
  for (int r = 0; r < kReplicas; ++r)
    est.push_back(integrate_rule(qmc_sphere_rule(n, per, kQmcSeed + r), width, f));
  std::vector<double> mean(width, 0.0);
  double err = 0.0;
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < kReplicas; ++r) mean[c] += est[r][c];
    mean[c] /= kReplicas;
    double var = 0.0;
    for (int r = 0; r < kReplicas; ++r) var += (est[r][c] - mean[c]) * (est[r][c] - mean[c]);
    var /= (kReplicas - 1);
    err = std::max(err, std::sqrt(var / kReplicas));
  }
  if (stat_error) *stat_error = err;
  return mean;
}

int default_sphere_nodes(int n) { return n <= 3 ? 4096 : 32768; }

namespace {

SphereIntegrals integrals_at(const KernelSpec& k, int nodes) {
  const int n = k.dimension();
  const int n2 = n * n;
  const int n4 = n2 * n2;
  const int width = n2 + n4 + n2;
  SphereIntegrals si;
  si.n = n;
  auto f = [&](const double* s, double* out) {
    double kv[16], g[256];
    k.evaluate(s, kv);
    k.gradient(s, g);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] = kv[j] * s[i];
    for (int kk = 0; kk < n; ++kk)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) out[n2 + ((kk * n + i) * n + j) * n + l] = g[i * n + j] * s[kk] * s[l];
    for (int ij = 0; ij < n2; ++ij) out[n2 + n4 + ij] = g[ij];
  };
  std::vector<double> v = integrate_sphere(n, nodes, width, f, &si.statistical_error);
  si.c.resize(n, n);
  si.zero_mean_residual.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      si.c(i, j) = v[i * n + j];
      si.zero_mean_residual(i, j) = std::abs(v[n2 + n4 + i * n + j]);
    }
  si.xi.assign(v.begin() + n2, v.begin() + n2 + n4);
  if (n == 2) si.quadrature_nodes = nodes + (nodes % 2);
  else if (n == 3) {
    const int p = std::max(2, static_cast<int>(std::ceil(std::sqrt(nodes / 2.0))));
    si.quadrature_nodes = 2 * p * p;
  } else {
    si.quadrature_nodes = kReplicas * 2 * std::max(1, std::max(2, nodes / kReplicas) / 2);
  }
  return si;
}

double max_change(const SphereIntegrals& a, const SphereIntegrals& b) {
  double d = (a.c - b.c).cwiseAbs().maxCoeff();
  d = std::max(d, (a.zero_mean_residual - b.zero_mean_residual).cwiseAbs().maxCoeff());
  for (std::size_t q = 0; q < a.xi.size(); ++q) d = std::max(d, std::abs(a.xi[q] - b.xi[q]));
  return d;
}

}  // namespace

SphereIntegrals sphere_integrals(const KernelSpec& k, int nodes) {
  require(nodes >= 64, "sphere_integrals needs at least 64 nodes");
  SphereIntegrals coarse = integrals_at(k, nodes);
  SphereIntegrals fine = integrals_at(k, 2 * nodes);
  const double change = max_change(coarse, fine);
  const double tol =
      k.dimension() <= 3 ? 1e-8 : std::max(1e-8, 4.0 * std::max(coarse.statistical_error, fine.statistical_error));
  coarse.refinement_change = change;
  coarse.tolerance = tol;
  if (!(change <= tol)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "sphere integrals not converged: doubling nodes changed results by %.3e (tol %.1e)",
                  change, tol);
    fail(ErrorCode::not_converged, buf);
  }
  return coarse;
}

double divergence_constant(const SphereIntegrals& si) { return si.c.trace(); }

double kernel_sphere_max(const KernelSpec& k, int nodes) {
  const int n = k.dimension();
  SphereRule rule = n <= 3 ? deterministic_sphere_rule(n, nodes) : qmc_sphere_rule(n, nodes, kQmcSeed);
  double best = 0.0;
  std::vector<double> v(n);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    k.evaluate(&rule.points[q * n], v.data());
    double s = 0.0;
    for (double x : v) s += x * x;
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
  char buf[32];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed for '" + path + "'");
}

}  // namespace patchflow
