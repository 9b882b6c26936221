#include "core/fields.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "core/errors.hpp"

namespace patchflow {

bool Box::contains(const double* x, double tol) const {
  if (empty()) return false;
  for (std::size_t d = 0; d < lo.size(); ++d)
    if (x[d] < lo[d] - tol || x[d] > hi[d] + tol) return false;
  return true;
}

void ScalarField::update_support_box() {
  support_box = Box{};
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(std::abs(values[i]) > 0.0)) continue;
    const double* x = point(i);
    if (support_box.empty()) {
      support_box.lo.assign(x, x + n);
      support_box.hi.assign(x, x + n);
      continue;
    }
    for (int d = 0; d < n; ++d) {
      support_box.lo[d] = std::min(support_box.lo[d], x[d]);
      support_box.hi[d] = std::max(support_box.hi[d], x[d]);
    }
  }
}

namespace {

std::vector<int> grid_dims(const std::vector<double>& lo, const std::vector<double>& hi, double h) {
  std::vector<int> dims(lo.size());
  for (std::size_t d = 0; d < lo.size(); ++d) {
    require(hi[d] > lo[d], "grid extent must have hi > lo");
    dims[d] = std::max(1, static_cast<int>(std::ceil((hi[d] - lo[d]) / h - 1e-9)));
  }
  return dims;
}

// Advances a multi-index in row-major order (last axis fastest).
bool next_index(std::vector<int>& idx, const std::vector<int>& dims) {
  for (int d = static_cast<int>(dims.size()) - 1; d >= 0; --d) {
    if (++idx[d] < dims[d]) return true;
    idx[d] = 0;
  }
  return false;
}

}  // namespace

ScalarField sample_grid_field(int n, const std::vector<double>& lo, const std::vector<double>& hi, double h,
                              const std::function<double(const double*)>& f, int sub) {
  require(n >= 1 && static_cast<int>(lo.size()) == n && static_cast<int>(hi.size()) == n, "grid extent dimension");
  require(h > 0.0, "grid spacing must be positive");
  require(sub >= 1, "subsampling factor must be >= 1");
  const std::vector<int> dims = grid_dims(lo, hi, h);
  ScalarField out;
  out.n = n;
  out.h = h;
  std::vector<int> idx(n, 0);
  std::vector<int> sidx(n, 0);
  const std::vector<int> sdims(n, sub);
  std::vector<double> x(n), y(n);
  do {
    for (int d = 0; d < n; ++d) x[d] = lo[d] + h * (idx[d] + 0.5);
    double v = 0.0;
    if (sub == 1) {
      v = f(x.data());
    } else {
      std::fill(sidx.begin(), sidx.end(), 0);
      double s = 0.0;
      do {
        for (int d = 0; d < n; ++d) y[d] = x[d] + h * ((sidx[d] + 0.5) / sub - 0.5);
        s += f(y.data());
      } while (next_index(sidx, sdims));
      v = s / std::pow(static_cast<double>(sub), n);
    }
    out.points.insert(out.points.end(), x.begin(), x.end());
    out.values.push_back(v);
  } while (next_index(idx, dims));
  out.update_support_box();
  return out;
}

ScalarField resample(const ScalarField& like, const std::function<double(const double*)>& f) {
  ScalarField out = like;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = f(out.point(i));
  out.update_support_box();
  return out;
}

namespace {

struct KeyHash {
  std::size_t operator()(const std::vector<long long>& k) const {
    std::size_t h = 1469598103934665603ULL;
    for (long long v : k) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

double dist2(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

}  // namespace

PairList select_pairs(int n, const std::vector<double>& points, double h, std::size_t budget, std::uint64_t seed) {
  const std::size_t count = points.size() / n;
  PairList pairs;
  if (count < 2 || budget == 0) return pairs;
  const double total = 0.5 * static_cast<double>(count) * static_cast<double>(count - 1);
  if (total <= static_cast<double>(budget)) {
    pairs.reserve(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j) pairs.emplace_back(i, j);
    return pairs;
  }
  pairs.reserve(budget);
  const double radius = 3.0 * h;
  const double r2 = radius * radius * (1.0 + 1e-12);
  if (radius > 0.0) {
    std::unordered_map<std::vector<long long>, std::vector<std::uint32_t>, KeyHash> cells;
    std::vector<long long> key(n);
    for (std::size_t i = 0; i < count; ++i) {
      for (int d = 0; d < n; ++d) key[d] = static_cast<long long>(std::floor(points[i * n + d] / radius));
      cells[key].push_back(static_cast<std::uint32_t>(i));
    }
    std::vector<std::uint32_t> found;
    std::vector<int> off(n, 0);
    const std::vector<int> three(n, 3);
    for (std::size_t i = 0; i < count && pairs.size() < budget; ++i) {
      found.clear();
      const double* xi = &points[i * n];
      std::fill(off.begin(), off.end(), 0);
      do {
        for (int d = 0; d < n; ++d) key[d] = static_cast<long long>(std::floor(xi[d] / radius)) + off[d] - 1;
        auto it = cells.find(key);
        if (it == cells.end()) continue;
        for (std::uint32_t j : it->second)
          if (j > i && dist2(xi, &points[j * n], n) <= r2) found.push_back(j);
      } while (next_index(off, three));
      std::sort(found.begin(), found.end());
      for (std::uint32_t j : found) {
        if (pairs.size() >= budget) break;
        pairs.emplace_back(static_cast<std::uint32_t>(i), j);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  const std::size_t need = budget - pairs.size();
  std::size_t attempts = 0;
  std::size_t added = 0;
  while (added < need && attempts < 20 * need + 100) {
    ++attempts;
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (radius > 0.0 && dist2(&points[i * n], &points[j * n], n) <= r2) continue;
    pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    ++added;
  }
  return pairs;
}

double seminorm_on_pairs(int n, const std::vector<double>& points, const std::vector<double>& values,
                         const PairList& pairs, double gamma) {
  double best = 0.0;
  for (const auto& [i, j] : pairs) {
    const double d = std::sqrt(dist2(&points[std::size_t(i) * n], &points[std::size_t(j) * n], n));
    if (!(d > 0.0)) continue;
    best = std::max(best, std::abs(values[i] - values[j]) / std::pow(d, gamma));
  }
  return best;
}

double lipschitz_on_pairs(int n, const std::vector<double>& points, const std::vector<double>& mapped, int m,
                          const PairList& pairs) {
  double best = 0.0;
  for (const auto& [i, j] : pairs) {
    const double d = std::sqrt(dist2(&points[std::size_t(i) * n], &points[std::size_t(j) * n], n));
    if (!(d > 0.0)) continue;
    const double e = std::sqrt(dist2(&mapped[std::size_t(i) * m], &mapped[std::size_t(j) * m], m));
    best = std::max(best, e / d);
  }
  return best;
}

HolderEstimate estimate_holder(const ScalarField& f, double gamma, std::size_t pair_budget, std::uint64_t seed) {
  if (f.size() == 0) fail(ErrorCode::invalid_argument, "estimate_holder on an empty field");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  HolderEstimate est;
  est.gamma = gamma;
  est.pair_budget = pair_budget;
  for (double v : f.values) est.sup_norm = std::max(est.sup_norm, std::abs(v));
  const PairList pairs = select_pairs(f.n, f.points, f.h, pair_budget, seed);
  est.pairs_inspected = pairs.size();
  est.seminorm_gamma = seminorm_on_pairs(f.n, f.points, f.values, pairs, gamma);
  return est;
}

std::size_t GridVectorField::size() const {
  std::size_t s = 1;
  for (int d : dims) s *= static_cast<std::size_t>(d);
  return s;
}

std::size_t GridVectorField::index(const int* multi) const {
  std::size_t flat = 0;
  for (int d = 0; d < n; ++d) flat = flat * dims[d] + multi[d];
  return flat;
}

void GridVectorField::point(std::size_t flat, double* x) const {
  for (int d = n - 1; d >= 0; --d) {
    x[d] = origin[d] + h * static_cast<double>(flat % dims[d]);
    flat /= dims[d];
  }
}

GridVectorField sample_grid_vector(int n, int m, const std::vector<double>& lo, const std::vector<double>& hi,
                                   double h, const std::function<void(const double*, double*)>& F) {
  require(static_cast<int>(lo.size()) == n && static_cast<int>(hi.size()) == n, "grid extent dimension");
  require(h > 0.0, "grid spacing must be positive");
  GridVectorField g;
  g.n = n;
  g.m = m;
  g.h = h;
  g.origin = lo;
  g.dims.resize(n);
  for (int d = 0; d < n; ++d) g.dims[d] = static_cast<int>(std::floor((hi[d] - lo[d]) / h + 1e-9)) + 1;
  g.values.resize(g.size() * m);
  std::vector<double> x(n);
  for (std::size_t p = 0; p < g.size(); ++p) {
    g.point(p, x.data());
    F(x.data(), &g.values[p * m]);
  }
  return g;
}

namespace {

// d_axis F_c at every grid point; central inside, one-sided at the edges.
std::vector<double> partial(const GridVectorField& F, int c, int axis) {
  const std::size_t count = F.size();
  std::size_t stride = 1;
  for (int d = F.n - 1; d > axis; --d) stride *= F.dims[d];
  std::vector<double> out(count);
  const int len = F.dims[axis];
  for (std::size_t p = 0; p < count; ++p) {
    const int i = static_cast<int>((p / stride) % len);
    const auto at = [&](std::size_t q) { return F.values[q * F.m + c]; };
    if (i == 0)
      out[p] = (at(p + stride) - at(p)) / F.h;
    else if (i == len - 1)
      out[p] = (at(p) - at(p - stride)) / F.h;
    else
      out[p] = (at(p + stride) - at(p - stride)) / (2.0 * F.h);
  }
  return out;
}

}  // namespace

GradNorms estimate_grad_norms(const GridVectorField& F, double gamma, std::size_t pair_budget, std::uint64_t seed) {
  for (int d : F.dims)
    if (d < 3) fail(ErrorCode::invalid_argument, "grid too small: need at least 3 points per axis");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  GradNorms out;
  ScalarField s;
  s.n = F.n;
  s.h = F.h;
  s.points.resize(F.size() * F.n);
  for (std::size_t p = 0; p < F.size(); ++p) F.point(p, &s.points[p * F.n]);
  const PairList pairs = select_pairs(F.n, s.points, F.h, pair_budget, seed);
  for (int c = 0; c < F.m; ++c)
    for (int j = 0; j < F.n; ++j) {
      const std::vector<double> d = partial(F, c, j);
      for (double v : d) out.sup = std::max(out.sup, std::abs(v));
      out.seminorm = std::max(out.seminorm, seminorm_on_pairs(F.n, s.points, d, pairs, gamma));
    }
  return out;
}

double interpolate(const GridVectorField& F, const double* x, int c) {
  const int n = F.n;
  std::vector<int> base(n);
  std::vector<double> frac(n);
  for (int d = 0; d < n; ++d) {
    double u = (x[d] - F.origin[d]) / F.h;
    u = std::clamp(u, 0.0, static_cast<double>(F.dims[d] - 1));
    int b = std::min(static_cast<int>(std::floor(u)), std::max(0, F.dims[d] - 2));
    base[d] = b;
    frac[d] = F.dims[d] > 1 ? u - b : 0.0;
  }
  double acc = 0.0;
  std::vector<int> idx(n);
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      const int bit = (corner >> d) & 1;
      idx[d] = std::min(base[d] + bit, F.dims[d] - 1);
      w *= bit ? frac[d] : 1.0 - frac[d];
    }
    if (w != 0.0) acc += w * F.values[F.index(idx.data()) * F.m + c];
  }
  return acc;
}

double norm_1_gamma(const GridVectorField& F, double gamma, std::size_t pair_budget, std::uint64_t seed) {
  std::vector<double> zero(F.n, 0.0);
  double f0 = 0.0;
  for (int c = 0; c < F.m; ++c) {
    const double v = interpolate(F, zero.data(), c);
    f0 += v * v;
  }
  const GradNorms g = estimate_grad_norms(F, gamma, pair_budget, seed);
  return std::sqrt(f0) + g.sup + g.seminorm;
}

double support_measure(const ScalarField& f, const std::vector<double>* weights) {
  if (weights && weights->size() != f.size()) fail(ErrorCode::dimension_mismatch, "weights and values differ in length");
  const double cell = std::pow(f.h, f.n);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::abs(f.values[i]) > kSupportThreshold) s += weights ? (*weights)[i] : cell;
  return s;
}

}  // namespace patchflow
