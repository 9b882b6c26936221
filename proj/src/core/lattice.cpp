#include "core/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace patchflow {

InitialDensity ball_patch(std::vector<double> center, double radius, double value) {
  require(radius > 0.0, "ball radius must be positive");
  InitialDensity d;
  d.rho = [center = std::move(center), r2 = radius * radius, value](const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
    return s < r2 ? value : 0.0;
  };
  return d;
}

InitialDensity annulus_patch(std::vector<double> center, double r_inner, double r_outer, double value) {
  require(r_inner >= 0.0 && r_outer > r_inner, "annulus needs 0 <= inner < outer radius");
  InitialDensity d;
  d.rho = [center = std::move(center), a2 = r_inner * r_inner, b2 = r_outer * r_outer, value](const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
    return (s >= a2 && s < b2) ? value : 0.0;
  };
  return d;
}

InitialDensity zero_density() {
  InitialDensity d;
  d.rho = [](const double*) { return 0.0; };
  return d;
}

std::size_t ParticleGeometry::flat(const int* multi) const {
  std::size_t f = 0;
  for (int d = 0; d < n; ++d) f = f * dims[d] + multi[d];
  return f;
}

std::int32_t ParticleGeometry::neighbor(std::size_t p, const int* delta) const {
  int idx[16];
  for (int d = 0; d < n; ++d) {
    idx[d] = cell[p * n + d] + delta[d];
    if (idx[d] < 0 || idx[d] >= dims[d]) return -1;
  }
  return lattice_to_particle[flat(idx)];
}

void ParticleGeometry::cell_center(std::size_t p, double* x) const {
  for (int d = 0; d < n; ++d) x[d] = origin[d] + h * cell[p * n + d];
}

GridVectorField ParticleGeometry::density_grid() const {
  GridVectorField g;
  g.n = n;
  g.m = 1;
  g.h = h;
  g.dims.resize(n);
  g.origin.resize(n);
  for (int d = 0; d < n; ++d) {
    g.dims[d] = dims[d] + 2;
    g.origin[d] = origin[d] - h;
  }
  g.values.assign(g.size(), 0.0);
  std::vector<int> idx(n);
  for (std::size_t p = 0; p < count(); ++p) {
    for (int d = 0; d < n; ++d) idx[d] = cell[p * n + d] + 1;
    g.values[g.index(idx.data())] = mass[p];
  }
  return g;
}

ScalarField ParticleGeometry::rho0_field() const {
  ScalarField f;
  f.n = n;
  f.h = h;
  f.points = alpha;
  f.values = rho0;
  f.update_support_box();
  return f;
}

namespace {

bool next_index(std::vector<int>& idx, const std::vector<int>& dims) {
  for (int d = static_cast<int>(dims.size()) - 1; d >= 0; --d) {
    if (++idx[d] < dims[d]) return true;
    idx[d] = 0;
  }
  return false;
}

void finish_lookup(ParticleGeometry& g) {
  std::size_t total = 1;
  for (int d : g.dims) total *= static_cast<std::size_t>(d);
  g.lattice_to_particle.assign(total, -1);
  for (std::size_t p = 0; p < g.count(); ++p)
    g.lattice_to_particle[g.flat(&g.cell[p * g.n])] = static_cast<std::int32_t>(p);
  g.rho0_sup = 0.0;
  for (double v : g.rho0) g.rho0_sup = std::max(g.rho0_sup, std::abs(v));
}

void make_sub_offsets(ParticleGeometry& g) {
  const int r = g.refine;
  std::size_t nsub = 1;
  for (int d = 0; d < g.n; ++d) nsub *= r;
  g.sub_offsets.resize(nsub * g.n);
  for (std::size_t s = 0; s < nsub; ++s) {
    std::size_t rem = s;
    for (int d = g.n - 1; d >= 0; --d) {
      g.sub_offsets[s * g.n + d] = ((rem % r) + 0.5) / r - 0.5;
      rem /= r;
    }
  }
}

std::shared_ptr<const ParticleGeometry> from_samples(int n, const ScalarField& s, int refine) {
  if (s.n != n) fail(ErrorCode::dimension_mismatch, "density samples have the wrong dimension");
  require(s.h > 0.0, "density samples need a positive spacing");
  auto g = std::make_shared<ParticleGeometry>();
  g->n = n;
  g->h = s.h;
  g->refine = refine;
  make_sub_offsets(*g);
  g->origin.assign(n, 0.0);
  std::vector<double> hi(n, 0.0);
  for (int d = 0; d < n; ++d) {
    g->origin[d] = s.points[d];
    hi[d] = s.points[d];
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int d = 0; d < n; ++d) {
      g->origin[d] = std::min(g->origin[d], s.points[i * n + d]);
      hi[d] = std::max(hi[d], s.points[i * n + d]);
    }
  g->dims.resize(n);
  for (int d = 0; d < n; ++d) g->dims[d] = static_cast<int>(std::lround((hi[d] - g->origin[d]) / s.h)) + 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(std::abs(s.values[i]) > kSupportThreshold)) continue;
    for (int d = 0; d < n; ++d) {
      const double x = s.points[i * n + d];
      const int k = static_cast<int>(std::lround((x - g->origin[d]) / s.h));
      if (std::abs(g->origin[d] + k * s.h - x) > 1e-6 * s.h)
        fail(ErrorCode::invalid_argument, "density samples are not on a regular grid");
      g->cell.push_back(k);
      g->alpha.push_back(x);
      g->offset.push_back(0.0);
    }
    g->mass.push_back(s.values[i]);
    g->rho0.push_back(s.values[i]);
    g->occupancy.push_back(1.0);
    g->sub_slot.push_back(-1);
  }
  // Sort particles into lattice order so the layout does not depend on file order.
  const std::size_t count = g->mass.size();
  std::vector<std::size_t> order(count);
  for (std::size_t p = 0; p < count; ++p) order[p] = p;
  std::vector<std::size_t> key(count);
  for (std::size_t p = 0; p < count; ++p) key[p] = g->flat(&g->cell[p * n]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  auto permute = [&](auto& v, int width) {
    auto copy = v;
    for (std::size_t p = 0; p < count; ++p)
      for (int c = 0; c < width; ++c) v[p * width + c] = copy[order[p] * width + c];
  };
  permute(g->cell, n);
  permute(g->alpha, n);
  permute(g->offset, n);
  permute(g->mass, 1);
  permute(g->rho0, 1);
  permute(g->occupancy, 1);
  for (std::size_t p = 1; p < count; ++p)
    if (key[order[p]] == key[order[p - 1]]) fail(ErrorCode::invalid_argument, "duplicate density sample");
  finish_lookup(*g);
  return g;
}

}  // namespace

std::shared_ptr<const ParticleGeometry> build_geometry(int n, const InitialDensity& rho, const LatticeOptions& opt) {
  require(n >= 2 && n <= 16, "dimension must be in [2, 16]");
  require(opt.refine >= 1 && opt.fine >= 1, "refinement factors must be >= 1");
  if (rho.samples) return from_samples(n, *rho.samples, opt.refine);
  require(opt.h > 0.0, "grid spacing must be positive");
  require(static_cast<int>(opt.lo.size()) == n && static_cast<int>(opt.hi.size()) == n, "grid extent dimension");
  require(static_cast<bool>(rho.rho), "initial density is empty");

  auto g = std::make_shared<ParticleGeometry>();
  g->n = n;
  g->h = opt.h;
  g->refine = opt.refine;
  g->rho = rho.rho;
  make_sub_offsets(*g);
  const double shift = opt.layout == LatticeLayout::cell_centered ? 0.5 : 0.0;
  g->origin.resize(n);
  g->dims.resize(n);
  for (int d = 0; d < n; ++d) {
    require(opt.hi[d] > opt.lo[d], "grid extent must have hi > lo");
    const long kmin = static_cast<long>(std::floor(opt.lo[d] / opt.h - shift + 0.5));
    const long kmax = static_cast<long>(std::floor(opt.hi[d] / opt.h - shift + 0.5));
    g->origin[d] = opt.h * (kmin + shift);
    g->dims[d] = static_cast<int>(kmax - kmin + 1);
  }

  const int r = opt.refine;
  const int rf = r * opt.fine;
  std::size_t nfine = 1, nsub = 1;
  for (int d = 0; d < n; ++d) {
    nfine *= rf;
    nsub *= r;
  }
  // Fine sample offsets (units of h) and the sub-cell each belongs to.
  std::vector<double> foff(nfine * n);
  std::vector<std::size_t> fsub(nfine);
  for (std::size_t s = 0; s < nfine; ++s) {
    std::size_t rem = s, sub = 0, mul = 1;
    for (int d = n - 1; d >= 0; --d) {
      const int k = static_cast<int>(rem % rf);
      rem /= rf;
      foff[s * n + d] = (k + 0.5) / rf - 0.5;
      sub += mul * (k / opt.fine);
      mul *= r;
    }
    fsub[s] = sub;
  }

  std::vector<int> idx(n, 0);
  std::vector<double> center(n), y(n), vals(nfine), sub(nsub), subc(nsub * n), suba(nsub);
  do {
    for (int d = 0; d < n; ++d) center[d] = g->origin[d] + opt.h * idx[d];
    bool uniform = true;
    for (std::size_t s = 0; s < nfine; ++s) {
      for (int d = 0; d < n; ++d) y[d] = center[d] + opt.h * foff[s * n + d];
      vals[s] = rho.rho(y.data());
      if (vals[s] != vals[0]) uniform = false;
    }
    if (uniform && !(std::abs(vals[0]) > kSupportThreshold)) continue;
    g->cell.insert(g->cell.end(), idx.begin(), idx.end());
    if (uniform) {
      g->alpha.insert(g->alpha.end(), center.begin(), center.end());
      g->offset.insert(g->offset.end(), n, 0.0);
      g->mass.push_back(vals[0]);
      g->rho0.push_back(vals[0]);
      g->occupancy.push_back(1.0);
      g->sub_slot.push_back(-1);
      continue;
    }
    double total = 0.0, wabs = 0.0, nz_sum = 0.0;
    std::size_t nz = 0;
    std::vector<double> c(n, 0.0);
    std::fill(sub.begin(), sub.end(), 0.0);
    std::fill(subc.begin(), subc.end(), 0.0);
    std::fill(suba.begin(), suba.end(), 0.0);
    for (std::size_t s = 0; s < nfine; ++s) {
      const double v = vals[s];
      total += v;
      sub[fsub[s]] += v;
      suba[fsub[s]] += std::abs(v);
      for (int d = 0; d < n; ++d) subc[fsub[s] * n + d] += std::abs(v) * foff[s * n + d];
      if (std::abs(v) > kSupportThreshold) {
        ++nz;
        nz_sum += v;
      }
      const double a = std::abs(v);
      wabs += a;
      for (int d = 0; d < n; ++d) c[d] += a * foff[s * n + d];
    }
    const double per_sub = static_cast<double>(nfine / nsub);
    for (double& v : sub) v /= per_sub;
    for (std::size_t s = 0; s < nsub; ++s)
      for (int d = 0; d < n; ++d)
        subc[s * n + d] = suba[s] > 0.0 ? subc[s * n + d] / suba[s] : g->sub_offsets[s * n + d];
    for (int d = 0; d < n; ++d) {
      const double off = wabs > 0.0 ? opt.h * c[d] / wabs : 0.0;
      g->offset.push_back(off);
      g->alpha.push_back(center[d] + off);
    }
    g->mass.push_back(total / nfine);
    g->rho0.push_back(nz ? nz_sum / nz : 0.0);
    g->occupancy.push_back(static_cast<double>(nz) / nfine);
    g->sub_slot.push_back(static_cast<std::int32_t>(g->sub_values.size() / nsub));
    g->sub_values.insert(g->sub_values.end(), sub.begin(), sub.end());
    g->sub_centroids.insert(g->sub_centroids.end(), subc.begin(), subc.end());
  } while (next_index(idx, g->dims));
  finish_lookup(*g);
  return g;
}

}  // namespace patchflow
