#include "core/singular_integrals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"
#include "core/pairsum.hpp"
#include "core/parallel.hpp"

namespace patchflow {

namespace {

// Nonzero samples of f as SoA sources with weight f_q h^n.
struct GridSources {
  int n = 0;
  std::vector<std::size_t> index;  // into f
  std::vector<double> pos;         // SoA
  std::vector<double> weight;
  std::vector<double> value;

  explicit GridSources(const ScalarField& f) : n(f.n) {
    const double cell = std::pow(f.h, f.n);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.values[i] != 0.0) index.push_back(i);
    const std::size_t count = index.size();
    pos.resize(count * n);
    weight.resize(count);
    value.resize(count);
    for (std::size_t q = 0; q < count; ++q) {
      const double* x = f.point(index[q]);
      for (int d = 0; d < n; ++d) pos[d * count + q] = x[d];
      value[q] = f.values[index[q]];
      weight[q] = value[q] * cell;
    }
  }
  std::size_t size() const { return index.size(); }
  double at(std::size_t q, int d) const { return pos[d * size() + q]; }
};

void check_field(const ScalarField& f, const std::vector<double>& targets) {
  require(f.n >= 2, "field dimension must be >= 2");
  require(f.h > 0.0, "field spacing must be positive");
  if (targets.size() % f.n != 0) fail(ErrorCode::dimension_mismatch, "target array is not a multiple of n");
}

void append_flag(QuadratureResult& r, const std::string& flag) {
  if (std::find(r.flags.begin(), r.flags.end(), flag) == r.flags.end()) r.flags.push_back(flag);
}

}  // namespace

QuadratureResult convolve_T(const KernelSpec& k, const ScalarField& f, const std::vector<double>& targets,
                            const QuadratureConfig& cfg) {
  check_field(f, targets);
  if (k.dimension() != f.n) fail(ErrorCode::dimension_mismatch, "kernel and field dimensions differ");
  require(cfg.near_field_refinement >= 1, "near_field_refinement must be >= 1");
  const int n = f.n;
  const double h = f.h;
  const int r = cfg.near_field_refinement;
  const GridSources src(f);
  const std::size_t nt = targets.size() / n;
  QuadratureResult res;
  res.width = n;
  res.values.assign(nt * n, 0.0);
  res.epsilon = 0.0;

  // Cells within one cell (max norm) of the target are refined.
  const double reach = 1.5 * h * (1.0 + 1e-12);
  const double near_r2 = reach * reach * n;
  std::vector<double> nr2(src.size(), near_r2);
  SourceArrays arrays{n, src.size(), src.pos.data(), src.weight.data(), nr2.data()};
  PairSumOptions opt;
  opt.mode = cfg.summation;

  // Sub-cell offsets in units of h.
  std::size_t nsub = 1;
  for (int d = 0; d < n; ++d) nsub *= r;
  std::vector<double> off(nsub * n);
  for (std::size_t s = 0; s < nsub; ++s) {
    std::size_t rem = s;
    for (int d = n - 1; d >= 0; --d) {
      off[s * n + d] = ((rem % r) + 0.5) / r - 0.5;
      rem /= r;
    }
  }
  const double sub_w = std::pow(h / r, n);

  std::vector<char> skipped(nt, 0);
  parallel_for(nt, [&](std::size_t b, std::size_t e) {
    Moments mo;
    std::vector<double> kv(n), d(n);
    std::vector<double> tmp(n);
    for (std::size_t t = b; t < e; ++t) {
      const double* x = &targets[t * n];
      double* out = &res.values[t * n];
      std::vector<std::uint32_t> near;
      if (k.has_linear_profile()) {
        linear_profile_moments(arrays, x, opt, mo);
        const Mat& M = k.profile_matrix();
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += M(j, m) * mo.S[m];
          out[j] = s;
        }
        near = mo.near;
      } else {
        std::vector<double> tot(n);
        reduce_terms(
            src.size(), n, cfg.summation,
            [&](std::size_t q, double* term) {
              double d2 = 0.0;
              for (int m = 0; m < n; ++m) {
                d[m] = x[m] - src.at(q, m);
                d2 += d[m] * d[m];
              }
              if (d2 < near_r2) {
                for (int m = 0; m < n; ++m) term[m] = 0.0;
                return;
              }
              k.evaluate(d.data(), term);
              for (int m = 0; m < n; ++m) term[m] *= src.weight[q];
            },
            tot.data());
        for (int j = 0; j < n; ++j) out[j] = tot[j];
        for (std::size_t q = 0; q < src.size(); ++q) {
          double d2 = 0.0;
          for (int m = 0; m < n; ++m) d2 += (x[m] - src.at(q, m)) * (x[m] - src.at(q, m));
          if (d2 < near_r2) near.push_back(static_cast<std::uint32_t>(q));
        }
      }
      for (std::uint32_t q : near) {
        double linf = 0.0;
        for (int m = 0; m < n; ++m) linf = std::max(linf, std::abs(x[m] - src.at(q, m)));
        if (linf > reach) {
          double d2 = 0.0;
          for (int m = 0; m < n; ++m) {
            d[m] = x[m] - src.at(q, m);
            d2 += d[m] * d[m];
          }
          if (d2 > 0.0) {
            k.evaluate(d.data(), kv.data());
            for (int j = 0; j < n; ++j) out[j] += kv[j] * src.weight[q];
          }
          continue;
        }
        bool excluded_any = false;
        for (std::size_t s = 0; s < nsub; ++s) {
          double sub_linf = 0.0;
          double d2 = 0.0;
          for (int m = 0; m < n; ++m) {
            d[m] = x[m] - (src.at(q, m) + h * off[s * n + m]);
            sub_linf = std::max(sub_linf, std::abs(d[m]));
            d2 += d[m] * d[m];
          }
          if (sub_linf <= 0.5 * h / r * (1.0 + 1e-12) || !(d2 > 0.0)) {
            excluded_any = true;
            continue;
          }
          k.evaluate(d.data(), kv.data());
          for (int j = 0; j < n; ++j) out[j] += kv[j] * src.value[q] * sub_w;
        }
        if (excluded_any && r == 1) skipped[t] = 1;
      }
    }
  });
  if (std::any_of(skipped.begin(), skipped.end(), [](char c) { return c != 0; }))
    append_flag(res, "target_on_source_cell_skipped");
  return res;
}

void require_zero_sphere_mean(const ScalarKernel& P, int n) {
  const int nodes = n <= 3 ? 2048 : 16384;
  double stat = 0.0;
  const std::vector<double> mean =
      integrate_sphere(n, nodes, 2, [&](const double* s, double* out) {
        const double v = P(s);
        out[0] = v;
        out[1] = std::abs(v);
      }, &stat);
  const double scale = std::max(mean[1], 1e-300);
  const double tol = std::max(1e-6 * scale, 4.0 * stat);
  if (!(std::abs(mean[0]) <= tol))
    fail(ErrorCode::non_cz_kernel, "kernel has nonzero sphere mean " + std::to_string(mean[0]) +
                                       "; principal value is not defined");
}

QuadratureResult convolve_S_pv(const ScalarKernel& P, const ScalarField& f, const std::vector<double>& targets,
                               const QuadratureConfig& cfg) {
  check_field(f, targets);
  require_zero_sphere_mean(P, f.n);
  const int n = f.n;
  const GridSources src(f);
  const std::size_t nt = targets.size() / n;
  QuadratureResult res;
  res.width = 1;
  res.values.assign(nt, 0.0);
  res.epsilon = cfg.exclusion_radius(f.h);
  const double eps2 = res.epsilon * res.epsilon;
  parallel_for(nt, [&](std::size_t b, std::size_t e) {
    std::vector<double> d(n);
    for (std::size_t t = b; t < e; ++t) {
      const double* x = &targets[t * n];
      double tot = 0.0;
      reduce_terms(
          src.size(), 1, cfg.summation,
          [&](std::size_t q, double* term) {
            double d2 = 0.0;
            for (int m = 0; m < n; ++m) {
              d[m] = x[m] - src.at(q, m);
              d2 += d[m] * d[m];
            }
            term[0] = d2 > eps2 && d2 > 0.0 ? P(d.data()) * src.weight[q] : 0.0;
          },
          &tot);
      res.values[t] = tot;
    }
  });
  return res;
}

double cell_value(const ScalarField& f, const double* x) {
  const double half = 0.5 * f.h * (1.0 + 1e-12);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double* p = f.point(i);
    bool in = true;
    for (int d = 0; d < f.n && in; ++d) in = std::abs(x[d] - p[d]) <= half;
    if (in) return f.values[i];
  }
  return 0.0;
}

QuadratureResult velocity_gradient(const KernelSpec& k, const SphereIntegrals& si, const ScalarField& f,
                                   const std::vector<double>& targets, const QuadratureConfig& cfg) {
  check_field(f, targets);
  if (k.dimension() != f.n || si.n != f.n) fail(ErrorCode::dimension_mismatch, "kernel and field dimensions differ");
  const int n = f.n;
  const GridSources src(f);
  const std::size_t nt = targets.size() / n;
  QuadratureResult res;
  res.width = n * n;
  res.values.assign(nt * n * n, 0.0);
  res.epsilon = cfg.exclusion_radius(f.h);
  const double eps2 = res.epsilon * res.epsilon;
  SourceArrays arrays{n, src.size(), src.pos.data(), src.weight.data(), nullptr};
  PairSumOptions opt;
  opt.mode = cfg.summation;
  opt.gradient = true;
  opt.pv_eps2 = eps2;
  parallel_for(nt, [&](std::size_t b, std::size_t e) {
    Moments mo;
    std::vector<double> d(n), g(n * n);
    for (std::size_t t = b; t < e; ++t) {
      const double* x = &targets[t * n];
      double* out = &res.values[t * n * n];
      if (k.has_linear_profile()) {
        linear_profile_moments(arrays, x, opt, mo);
        const Mat& M = k.profile_matrix();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s = M(j, i) * mo.A;
            for (int m = 0; m < n; ++m) s -= n * M(j, m) * mo.B[m * n + i];
            out[i * n + j] = s;
          }
      } else {
        reduce_terms(
            src.size(), n * n, cfg.summation,
            [&](std::size_t q, double* term) {
              double d2 = 0.0;
              for (int m = 0; m < n; ++m) {
                d[m] = x[m] - src.at(q, m);
                d2 += d[m] * d[m];
              }
              if (!(d2 > eps2 && d2 > 0.0)) {
                std::fill(term, term + n * n, 0.0);
                return;
              }
              k.gradient(d.data(), term);
              for (int c = 0; c < n * n; ++c) term[c] *= src.weight[q];
            },
            out);
      }
      const double fx = cell_value(f, x);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i * n + j] += si.c(i, j) * fx;
    }
  });
  return res;
}

namespace {

double g_with_fallback(const ScalarKernel& g, const double* x, int n, double h, bool& fallback) {
  const double v = g(x);
  if (std::isfinite(v)) return v;
  std::vector<double> y(x, x + n);
  for (int d = 0; d < n; ++d) {
    y[d] = x[d] + h;
    const double a = g(y.data());
    y[d] = x[d] - h;
    const double b = g(y.data());
    y[d] = x[d];
    if (std::isfinite(a) && std::isfinite(b)) {
      fallback = true;
      return 0.5 * (a + b);
    }
  }
  fail(ErrorCode::invalid_argument, "g is undefined at a source and at its neighbours");
}

}  // namespace

QuadratureResult convolve_hypersingular(const ScalarKernel& H, const ScalarKernel& g, const ScalarField& f,
                                        const std::vector<double>& targets, const QuadratureConfig& cfg) {
  check_field(f, targets);
  const int n = f.n;
  const GridSources src(f);
  const std::size_t nt = targets.size() / n;
  QuadratureResult res;
  res.width = 1;
  res.values.assign(nt, 0.0);
  res.epsilon = cfg.exclusion_radius(f.h);
  bool fallback = false;
  std::vector<double> gq(src.size());
  std::vector<double> x(n);
  for (std::size_t q = 0; q < src.size(); ++q) {
    for (int d = 0; d < n; ++d) x[d] = src.at(q, d);
    gq[q] = g_with_fallback(g, x.data(), n, f.h, fallback);
  }
  std::vector<double> gt(nt);
  for (std::size_t t = 0; t < nt; ++t) gt[t] = g_with_fallback(g, &targets[t * n], n, f.h, fallback);
  const double e1 = res.epsilon * res.epsilon;
  const double e2 = 4.0 * e1;
  parallel_for(nt, [&](std::size_t b, std::size_t e) {
    std::vector<double> d(n);
    for (std::size_t t = b; t < e; ++t) {
      const double* xt = &targets[t * n];
      double tot[2];
      reduce_terms(
          src.size(), 2, cfg.summation,
          [&](std::size_t q, double* term) {
            double d2 = 0.0;
            for (int m = 0; m < n; ++m) {
              d[m] = xt[m] - src.at(q, m);
              d2 += d[m] * d[m];
            }
            if (!(d2 > e1 && d2 > 0.0)) {
              term[0] = term[1] = 0.0;
              return;
            }
            const double v = H(d.data()) * (gt[t] - gq[q]) * src.weight[q];
            term[0] = v;
            term[1] = d2 > e2 ? v : 0.0;
          },
          tot);
      res.values[t] = 2.0 * tot[0] - tot[1];
    }
  });
  if (fallback) append_flag(res, "g_interpolated");
  return res;
}

}  // namespace patchflow
