#include "core/flow.hpp"

#include <algorithm>
#include <cmath>

#include "core/determinant.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/picard.hpp"

namespace patchflow {

FlowModel make_model(const KernelSpec& k, const Mat& c, const QuadratureConfig& q) {
  if (c.rows() != k.dimension() || c.cols() != k.dimension())
    fail(ErrorCode::dimension_mismatch, "c matrix does not match the kernel dimension");
  return FlowModel{k, c, q};
}

VelocityField::VelocityField(const ParticleGeometry& g, const FlowModel& m, const double* X, const double* DX,
                             const double* det, double t)
    : g_(g), m_(m), n_(g.n), count_(g.count()), X_(X), DX_(DX), det_(det) {
  if (m.kernel.dimension() != n_) fail(ErrorCode::dimension_mismatch, "kernel and flow dimensions differ");
  const int n = n_;
  const double cell = std::pow(g.h, n);
  pos_.resize(count_ * n);
  weight_.resize(count_);
  near_r2_.resize(count_);
  dxinvT_.resize(count_ * n * n);
  const double reach = m.blend_outer * g.h * std::sqrt(static_cast<double>(n));
  for (std::size_t q = 0; q < count_; ++q) {
    if (!(det[q] > 0.0)) throw OrientationLost(q, t, det[q]);
    for (int d = 0; d < n; ++d) pos_[d * count_ + q] = X[q * n + d];
    weight_[q] = g.mass[q] * det[q] * cell;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> D(&DX[q * n * n], n, n);
    const Mat inv = D.inverse();
    double c2 = 0.0;
    for (int d = 0; d < n; ++d) c2 += g.offset[q * n + d] * g.offset[q * n + d];
    // |DX|_2 <= sqrt(|DX|_1 |DX|_inf)
    const double norm2 = std::sqrt(D.cwiseAbs().colwise().sum().maxCoeff() * D.cwiseAbs().rowwise().sum().maxCoeff());
    const double r = norm2 * (reach + std::sqrt(c2)) * (1.0 + 1e-9);
    near_r2_[q] = r * r;
    // DX^{-T}(i,j) = inv(j,i)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dxinvT_[q * n * n + i * n + j] = inv(j, i);
  }
  eps_ = m.quad.exclusion_radius(g.h);
}

namespace {

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

}  // namespace

// Velocity at x, plus the gradient when G is not null (rho_c is the density
// multiplying the c matrix).
void VelocityField::at_target(const double* x, double* v, double* G, double rho_c, Moments& mo) const {
  const int n = n_;
  const KernelSpec& k = m_.kernel;
  std::vector<std::uint32_t> near;
  if (k.has_linear_profile()) {
    SourceArrays arrays{n, count_, pos_.data(), weight_.data(), near_r2_.data()};
    PairSumOptions opt;
    opt.mode = m_.quad.summation;
    opt.gradient = G != nullptr;
    opt.pv_eps2 = eps_ * eps_;
    linear_profile_moments(arrays, x, opt, mo);
    const Mat& M = k.profile_matrix();
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += M(j, m) * mo.S[m];
      v[j] = s;
    }
    if (G) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = M(j, i) * mo.A;
          for (int m = 0; m < n; ++m) s -= n * M(j, m) * mo.B[m * n + i];
          G[i * n + j] = s;
        }
    }
    near.swap(mo.near);
  } else {
    const int width = n + (G ? n * n : 0);
    std::vector<double> tot(width), d(n);
    const double eps2 = eps_ * eps_;
    reduce_terms(
        count_, width, m_.quad.summation,
        [&](std::size_t q, double* term) {
          double d2 = 0.0;
          for (int c = 0; c < n; ++c) {
            d[c] = x[c] - pos_[c * count_ + q];
            d2 += d[c] * d[c];
          }
          std::fill(term, term + width, 0.0);
          if (!(d2 > 0.0)) return;
          if (d2 >= near_r2_[q]) {
            k.evaluate(d.data(), term);
            for (int c = 0; c < n; ++c) term[c] *= weight_[q];
          }
          if (G && d2 > eps2) {
            k.gradient(d.data(), term + n);
            for (int c = 0; c < n * n; ++c) term[n + c] *= weight_[q];
          }
        },
        tot.data());
    for (int j = 0; j < n; ++j) v[j] = tot[j];
    if (G)
      for (int c = 0; c < n * n; ++c) G[c] = tot[n + c];
    for (std::size_t q = 0; q < count_; ++q) {
      double d2 = 0.0;
      for (int c = 0; c < n; ++c) d2 += (x[c] - pos_[c * count_ + q]) * (x[c] - pos_[c * count_ + q]);
      if (d2 < near_r2_[q]) near.push_back(static_cast<std::uint32_t>(q));
    }
  }
  if (G)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G[i * n + j] += m_.c(i, j) * rho_c;

  // Near field.
  const double h = g_.h;
  const int r = g_.refine;
  const std::size_t nsub = g_.subcells();
  const double sub_cell = std::pow(h / r, n);
  thread_local Leaves leaves;
  leaves.y.clear();
  leaves.w.clear();
  double dx[16], delta[16], ref[16], at[16], center[16];
  for (std::uint32_t q : near) {
    const double* Xq = &X_[q * n];
    const double* D = &DX_[q * n * n];
    const double* Ti = &dxinvT_[q * n * n];
    for (int c = 0; c < n; ++c) dx[c] = x[c] - Xq[c];
    double linf = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = g_.offset[q * n + i];
      for (int j = 0; j < n; ++j) s += Ti[i * n + j] * dx[j];
      delta[i] = s;
      linf = std::max(linf, std::abs(s));
    }
    const double u = linf / h;
    const double phi =
        u <= m_.blend_inner ? 1.0 : 1.0 - smoothstep((u - m_.blend_inner) / (m_.blend_outer - m_.blend_inner));
    if (phi < 1.0) leaves.push(dx, n, (1.0 - phi) * weight_[q]);
    if (phi > 0.0) {
      const std::int32_t slot = g_.sub_slot[q];
      const std::size_t base = static_cast<std::size_t>(slot) * nsub;
      const double* sv = slot >= 0 ? &g_.sub_values[base] : nullptr;
      g_.cell_center(q, center);
      const Cell cell{delta, &g_.offset[q * n], dx, D, sv && g_.rho ? center : nullptr, phi * det_[q]};
      const double uniform = g_.mass[q];
      const double wsub = phi * det_[q] * sub_cell;
      for (std::size_t s = 0; s < nsub; ++s) {
        const double rho_s = sv ? sv[s] : uniform;
        if (rho_s == 0.0) continue;
        const double* c = sv ? &g_.sub_centroids[(base + s) * n] : &g_.sub_offsets[s * n];
        for (int i = 0; i < n; ++i) {
          ref[i] = h * g_.sub_offsets[s * n + i];
          at[i] = h * c[i];
        }
        subcell(cell, ref, at, h / r, 0, rho_s * wsub, 1.0, leaves);
      }
    }
  }
  if (!leaves.w.empty()) {
    double add[16];
    sum_leaves(leaves, add);
    for (int j = 0; j < n; ++j) v[j] += add[j];
  }
}

void VelocityField::sum_leaves(Leaves& leaves, double* v) const {
  const int n = n_;
  const std::size_t count = leaves.w.size();
  const KernelSpec& k = m_.kernel;
  if (k.has_linear_profile()) {
    // d = 0 - (-y) = y exactly.
    thread_local std::vector<double> pos;
    thread_local Moments mo;
    pos.resize(count * n);
    for (std::size_t q = 0; q < count; ++q)
      for (int m = 0; m < n; ++m) pos[m * count + q] = -leaves.y[q * n + m];
    const double origin[16] = {0};
    SourceArrays arrays{n, count, pos.data(), leaves.w.data(), nullptr};
    PairSumOptions opt;
    opt.mode = m_.quad.summation;
    linear_profile_moments(arrays, origin, opt, mo);
    const Mat& M = k.profile_matrix();
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += M(j, m) * mo.S[m];
      v[j] = s;
    }
    return;
  }
  std::vector<double> tot(n);
  reduce_terms(
      count, n, m_.quad.summation,
      [&](std::size_t q, double* term) {
        const double* y = &leaves.y[q * n];
        double y2 = 0.0;
        for (int m = 0; m < n; ++m) y2 += y[m] * y[m];
        if (!(y2 > 0.0)) {
          std::fill(term, term + n, 0.0);
          return;
        }
        k.evaluate(y, term);
        for (int m = 0; m < n; ++m) term[m] *= leaves.w[q];
      },
      tot.data());
  for (int j = 0; j < n; ++j) v[j] = tot[j];
}

// Sub-cell with center `geo` (relative to the cell center) and side a,
// evaluated at `at`. Sub-cells near the target are split in 2^n up to
// near_depth times; the midpoint rule on the cells next to the target is
// only first order in their size. The split and the leaf exclusion are
// blended over a band so the velocity stays continuous in the target.
// Cut cells sit at the centroid of their content, and sample rho0 at the
// leaves once split.
void VelocityField::subcell(const Cell& c, const double* geo, const double* at, double a, int depth, double w,
                            double frac, Leaves& out) const {
  const int n = n_;
  double e2 = 0.0, einf = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = geo[i] - c.delta[i];
    e2 += e * e;
    einf = std::max(einf, std::abs(e));
  }
  if (depth < m_.near_depth) {
    const double split = 1.0 - smoothstep(4.0 * (einf / a - 1.25));
    if (split > 0.0) {
      double child[16];
      const double wc = w / static_cast<double>(1 << n);
      for (int code = 0; code < (1 << n); ++code) {
        for (int i = 0; i < n; ++i) child[i] = geo[i] + ((code >> i) & 1 ? 0.25 : -0.25) * a;
        subcell(c, child, child, 0.5 * a, depth + 1, wc, frac * split, out);
      }
      if (split == 1.0) return;
      frac *= 1.0 - split;
    }
  }
  const double keep = smoothstep(4.0 * (std::sqrt(e2) / a - m_.subcell_exclusion));
  if (keep == 0.0) return;
  if (depth > 0 && c.center) {
    double y[16];
    for (int i = 0; i < n; ++i) y[i] = c.center[i] + geo[i];
    w = std::pow(a, n) * g_.rho(y) * c.det;
    if (w == 0.0) return;
  }
  // y = x - (X_q + DX^T (at - off))
  double y[16];
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c.D[i * n + j] * (at[i] - c.off[i]);
    y[j] = c.dx[j] - s;
  }
  out.push(y, n, w * frac * keep);
}

void VelocityField::velocity(const double* targets, std::size_t count, double* out) const {
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    Moments mo;
    for (std::size_t t = b; t < e; ++t) at_target(&targets[t * n_], &out[t * n_], nullptr, 0.0, mo);
  });
}

void VelocityField::particle_velocity_gradient(double* V, double* G) const {
  const int n = n_;
  parallel_for(count_, [&](std::size_t b, std::size_t e) {
    Moments mo;
    for (std::size_t p = b; p < e; ++p)
      at_target(&X_[p * n], &V[p * n], G ? &G[p * n * n] : nullptr, g_.rho0[p], mo);
  });
}

Evaluation evaluate(const FlowState& s, const FlowModel& m, bool gradient) {
  const int n = s.n();
  VelocityField field(*s.geom, m, s.X.data(), s.DX.data(), s.det.data(), s.t);
  Evaluation e;
  e.V.assign(s.count() * n, 0.0);
  if (gradient) e.G.assign(s.count() * n * n, 0.0);
  field.particle_velocity_gradient(e.V.data(), gradient ? e.G.data() : nullptr);
  e.VT.assign(s.tracer_X.size(), 0.0);
  if (!s.tracer_X.empty()) field.velocity(s.tracer_X.data(), s.tracers(), e.VT.data());
  return e;
}

std::vector<double> velocity_from_state(const FlowState& s, const FlowModel& m, const std::vector<double>& targets) {
  const int n = s.n();
  if (targets.size() % n != 0) fail(ErrorCode::dimension_mismatch, "target array is not a multiple of n");
  std::vector<double> out(targets.size(), 0.0);
  if (s.count() == 0) return out;
  VelocityField field(*s.geom, m, s.X.data(), s.DX.data(), s.det.data(), s.t);
  field.velocity(targets.data(), targets.size() / n, out.data());
  return out;
}

void fit_jacobians(const ParticleGeometry& g, const double* Y, int m, double* out) {
  const int n = g.n;
  parallel_for(g.count(), [&](std::size_t b, std::size_t e) {
    std::vector<int> delta(n);
    for (std::size_t p = b; p < e; ++p) {
      for (int radius = 1; radius <= 2; ++radius) {
        Mat AtA = Mat::Zero(n, n);
        Mat AtB = Mat::Zero(n, m);
        const int side = 2 * radius + 1;
        int total = 1;
        for (int d = 0; d < n; ++d) total *= side;
        int used = 0;
        for (int code = 0; code < total; ++code) {
          int rem = code;
          bool self = true;
          for (int d = n - 1; d >= 0; --d) {
            delta[d] = rem % side - radius;
            rem /= side;
            if (delta[d] != 0) self = false;
          }
          if (self) continue;
          const std::int32_t q = g.neighbor(p, delta.data());
          if (q < 0) continue;
          ++used;
          Eigen::VectorXd a(n);
          for (int d = 0; d < n; ++d) a(d) = g.alpha[q * n + d] - g.alpha[p * n + d];
          Eigen::RowVectorXd bq(m);
          for (int c = 0; c < m; ++c) bq(c) = Y[q * m + c] - Y[p * m + c];
          AtA += a * a.transpose();
          AtB += a * bq;
        }
        Eigen::LDLT<Mat> ldlt(AtA);
        const double lo = ldlt.vectorD().cwiseAbs().minCoeff();
        const double hi = ldlt.vectorD().cwiseAbs().maxCoeff();
        if (used >= n && hi > 0.0 && lo > 1e-8 * hi) {
          const Mat D = ldlt.solve(AtB);
          for (int i = 0; i < n; ++i)
            for (int c = 0; c < m; ++c) out[p * n * m + i * m + c] = D(i, c);
          break;
        }
        if (radius == 2) fail(ErrorCode::internal, "particle " + std::to_string(p) + " has too few neighbours for a Jacobian fit");
      }
    }
  });
}

void jacobian_rate(std::size_t count, int n, const double* DX, const double* G, double* out) {
  for (std::size_t p = 0; p < count; ++p) {
    const double* A = &DX[p * n * n];
    const double* B = &G[p * n * n];
    double* C = &out[p * n * n];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += A[i * n + k] * B[k * n + j];
        C[i * n + j] = s;
      }
  }
}

Flow::Flow(FlowState s, FlowModel m, TimeIntegratorConfig cfg, bool keep_history)
    : s_(std::move(s)), m_(std::move(m)), cfg_(cfg), keep_history_(keep_history) {
  validate(cfg_);
  if (cfg_.jacobian_mode == JacobianMode::finite_difference && s_.count() > 0) {
    fit_jacobians(*s_.geom, s_.X.data(), s_.n(), s_.DX.data());
    s_.refresh_det();
  }
}

Evaluation Flow::stage_eval(const FlowState& st) const { return evaluate(st, m_, true); }

const Evaluation& Flow::current() {
  if (!cur_) {
    cur_ = stage_eval(s_);
    if (keep_history_) {
      Checkpoint cp;
      cp.t = s_.t;
      cp.X = s_.X;
      cp.DX = s_.DX;
      cp.V = cur_->V;
      if (cfg_.jacobian_mode == JacobianMode::variational) {
        cp.dDX.resize(s_.DX.size());
        jacobian_rate(s_.count(), s_.n(), s_.DX.data(), cur_->G.data(), cp.dDX.data());
      }
      history_.push_back(std::move(cp));
    }
  }
  return *cur_;
}

const std::vector<Checkpoint>& Flow::history() {
  current();
  return history_;
}

FlowState Flow::stage_state(const std::vector<double>& X, const std::vector<double>* DX, const std::vector<double>& T,
                            double t) const {
  FlowState st;
  st.geom = s_.geom;
  st.t = t;
  st.step = s_.step;
  st.X = X;
  st.tracer_alpha = s_.tracer_alpha;
  st.tracer_X = T;
  st.det.resize(s_.count());
  if (cfg_.jacobian_mode == JacobianMode::finite_difference) {
    st.DX.resize(s_.DX.size());
    if (s_.count() > 0) fit_jacobians(*s_.geom, st.X.data(), s_.n(), st.DX.data());
  } else {
    st.DX = *DX;
  }
  st.refresh_det();
  return st;
}

void Flow::commit(FlowState next) {
  next.step = s_.step + 1;
  s_ = std::move(next);
  cur_.reset();
}

void Flow::rk_step(bool rk4) {
  const int n = s_.n();
  const double dt = cfg_.dt;
  const bool var = cfg_.jacobian_mode == JacobianMode::variational;
  const std::size_t nX = s_.X.size(), nD = s_.DX.size(), nT = s_.tracer_X.size();

  struct Rate {
    std::vector<double> X, DX, T;
  };
  auto rate_of = [&](const FlowState& st, const Evaluation& e) {
    Rate r;
    r.X = e.V;
    r.T = e.VT;
    if (var) {
      r.DX.resize(nD);
      jacobian_rate(st.count(), n, st.DX.data(), e.G.data(), r.DX.data());
    }
    return r;
  };
  auto shifted = [&](const Rate& k, double a) {
    std::vector<double> X(nX), DX, T(nT);
    for (std::size_t i = 0; i < nX; ++i) X[i] = s_.X[i] + a * k.X[i];
    for (std::size_t i = 0; i < nT; ++i) T[i] = s_.tracer_X[i] + a * k.T[i];
    if (var) {
      DX.resize(nD);
      for (std::size_t i = 0; i < nD; ++i) DX[i] = s_.DX[i] + a * k.DX[i];
    }
    return stage_state(X, var ? &DX : nullptr, T, s_.t + a);
  };

  const Rate k1 = rate_of(s_, current());
  if (!rk4) {
    commit(shifted(k1, dt));
    return;
  }
  const FlowState s2 = shifted(k1, 0.5 * dt);
  const Rate k2 = rate_of(s2, stage_eval(s2));
  const FlowState s3 = shifted(k2, 0.5 * dt);
  const Rate k3 = rate_of(s3, stage_eval(s3));
  const FlowState s4 = shifted(k3, dt);
  const Rate k4 = rate_of(s4, stage_eval(s4));
  Rate comb;
  auto mix = [&](const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                 const std::vector<double>& d) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0;
    return out;
  };
  comb.X = mix(k1.X, k2.X, k3.X, k4.X);
  comb.T = mix(k1.T, k2.T, k3.T, k4.T);
  if (var) comb.DX = mix(k1.DX, k2.DX, k3.DX, k4.DX);
  FlowState next = shifted(comb, dt);
  next.t = s_.t + dt;
  commit(std::move(next));
}

void Flow::picard_step() {
  const PicardResult pr = picard_iterate(s_, m_, cfg_.dt, cfg_.picard_iterations, cfg_.picard_nodes,
                                         cfg_.jacobian_mode, 1e-13, current());
  if (pr.diverged) fail(ErrorCode::not_converged, "Picard iteration diverged");
  commit(pr.end);
}

void Flow::step() {
  if (cfg_.scheme == Scheme::picard) picard_step();
  else rk_step(cfg_.scheme == Scheme::rk4);
}

void Flow::advance(int steps) {
  for (int i = 0; i < steps; ++i) step();
}

}  // namespace patchflow
