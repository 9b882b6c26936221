#include "core/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/errors.hpp"

namespace patchflow {

double drift_bound_constant(const KernelSpec& k, int nodes) {
  const int n = k.dimension();
  if (nodes <= 0) nodes = default_sphere_nodes(n);
  const double K = kernel_sphere_max(k, nodes);
  return K * sphere_area(n) * std::pow(ball_volume(n), -1.0 / n) * std::sqrt(static_cast<double>(n));
}

std::vector<double> MonitorState::pack() const {
  std::vector<double> v = {int_grad_v, int_grad_X, G_t, last_g, support0, rho0_holder, started ? 1.0 : 0.0,
                           static_cast<double>(fit_t.size())};
  v.insert(v.end(), fit_t.begin(), fit_t.end());
  v.insert(v.end(), fit_log.begin(), fit_log.end());
  return v;
}

MonitorState MonitorState::unpack(const std::vector<double>& v) {
  if (v.size() < 8) fail(ErrorCode::io, "truncated monitor state");
  MonitorState s;
  s.int_grad_v = v[0];
  s.int_grad_X = v[1];
  s.G_t = v[2];
  s.last_g = v[3];
  s.support0 = v[4];
  s.rho0_holder = v[5];
  s.started = v[6] != 0.0;
  const auto m = static_cast<std::size_t>(v[7]);
  if (v.size() != 8 + 2 * m) fail(ErrorCode::io, "monitor state has the wrong length");
  s.fit_t.assign(v.begin() + 8, v.begin() + 8 + m);
  s.fit_log.assign(v.begin() + 8 + m, v.end());
  return s;
}

DiagnosticsMonitor::DiagnosticsMonitor(std::shared_ptr<const ParticleGeometry> g, const KernelSpec& k,
                                       const SphereIntegrals& si, DiagnosticsConfig cfg)
    : g_(std::move(g)), cfg_(cfg) {
  require(cfg_.gamma > 0.0 && cfg_.gamma < 1.0, "gamma must lie in (0, 1)");
  require(cfg_.slack >= 1.0, "slack must be at least 1");
  divergence_free_ = std::abs(divergence_constant(si)) < 1e-8;
  c_drift_ = drift_bound_constant(k, si.quadrature_nodes);
  const std::size_t count = g_->count();
  pairs_ = select_pairs(g_->n, g_->alpha, g_->h, std::max(cfg_.pair_budget, count), cfg_.seed);
  if (count > 0) {
    const ScalarField rho0 = g_->rho0_field();
    acc_.rho0_holder = estimate_holder(rho0, cfg_.gamma, std::max(cfg_.pair_budget, count), cfg_.seed).seminorm_gamma;
  }
}

void DiagnosticsMonitor::restore(const MonitorState& st, std::vector<DiagnosticsRecord> records,
                                 std::vector<MonitorRecord> monitors) {
  require(!records.empty() && records.size() == monitors.size(), "monitor restore needs matching record lists");
  acc_ = st;
  last_ = records.back();
  records_ = std::move(records);
  monitors_ = std::move(monitors);
}

const DiagnosticsRecord& DiagnosticsMonitor::record(const FlowState& s, const std::vector<double>& G, const double* x0) {
  const ParticleGeometry& g = *g_;
  const int n = g.n;
  const std::size_t count = g.count();
  const double gamma = cfg_.gamma;
  DiagnosticsRecord r;
  r.step = s.step;
  r.t = s.t;

  r.grad_X_sup = count > 0 ? 0.0 : 1.0;
  for (double v : s.DX) r.grad_X_sup = std::max(r.grad_X_sup, std::abs(v));
  for (double v : G) r.grad_v_sup = std::max(r.grad_v_sup, std::abs(v));

  const double cell = std::pow(g.h, n);
  double support = 0.0;
  for (std::size_t p = 0; p < count; ++p)
    if (std::abs(g.rho0[p]) > kSupportThreshold) support += g.occupancy[p] * cell * s.det[p];
  r.support = support;

  double x2 = 0.0;
  for (int d = 0; d < n; ++d) x2 += x0[d] * x0[d];
  r.x0_drift = std::sqrt(x2);

  // Pair quantities: Holder seminorm of DX and the bilipschitz constant.
  double holder = 0.0, lip = 0.0, colip = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : pairs_) {
    double da2 = 0.0, dx2 = 0.0, ddx = 0.0;
    for (int c = 0; c < n; ++c) {
      const double ea = g.alpha[a * n + c] - g.alpha[b * n + c];
      const double ex = s.X[a * n + c] - s.X[b * n + c];
      da2 += ea * ea;
      dx2 += ex * ex;
    }
    for (int c = 0; c < n * n; ++c) ddx = std::max(ddx, std::abs(s.DX[a * n * n + c] - s.DX[b * n * n + c]));
    const double da = std::sqrt(da2), dx = std::sqrt(dx2);
    if (!(da > 0.0)) continue;
    holder = std::max(holder, ddx / std::pow(da, gamma));
    lip = std::max(lip, dx / da);
    colip = std::min(colip, dx / da);
  }
  r.grad_X_holder = holder;
  r.bilipschitz_M = pairs_.empty() ? 1.0 : std::max(lip, colip > 0.0 ? 1.0 / colip : std::numeric_limits<double>::infinity());

  // Time integrals by the trapezoid rule on the record grid.
  const double g_now_exp_arg = [&] {
    if (!last_) return 0.0;
    const double dt = r.t - last_->t;
    acc_.int_grad_v += 0.5 * dt * (last_->grad_v_sup + r.grad_v_sup);
    acc_.int_grad_X += 0.5 * dt * (last_->grad_X_sup + r.grad_X_sup);
    return acc_.int_grad_v;
  }();
  const double g_now = acc_.rho0_holder * std::exp((1.0 + 2.0 * gamma) * g_now_exp_arg);
  if (last_) acc_.G_t += 0.5 * (r.t - last_->t) * (acc_.last_g + g_now);
  acc_.last_g = g_now;
  if (!acc_.started) {
    acc_.support0 = r.support;
    acc_.started = true;
  }
  r.gronwall_envelope = std::exp(acc_.int_grad_v);
  r.G_t = acc_.G_t;

  // Checks.
  MonitorRecord m;
  m.step = r.step;
  m.t = r.t;
  m.gronwall_ratio = r.grad_X_sup / r.gronwall_envelope;
  if (r.grad_X_sup > cfg_.slack * r.gronwall_envelope) r.flags.push_back("gronwall_exceeded");
  const double support_bound = std::pow(static_cast<double>(n), 0.5 * n) * acc_.support0 * std::pow(r.grad_X_sup, n);
  m.support_ratio = support_bound > 0.0 ? r.support / support_bound : 0.0;
  if (r.support > support_bound) r.flags.push_back("support_growth_exceeded");
  const double drift_bound = c_drift_ * std::pow(acc_.support0, 1.0 / n) * g.rho0_sup * acc_.int_grad_X;
  m.x0_ratio = drift_bound > 0.0 ? r.x0_drift / drift_bound : (r.x0_drift > 0.0 ? INFINITY : 0.0);
  if (r.x0_drift > cfg_.slack * drift_bound) r.flags.push_back("x0_drift_exceeded");
  const double holder_bound = r.G_t * r.gronwall_envelope;
  m.holder_ratio = holder_bound > 0.0 ? r.grad_X_holder / holder_bound : (r.grad_X_holder > 0.0 ? INFINITY : 0.0);
  m.bilipschitz_ratio = r.bilipschitz_M / r.gronwall_envelope;
  if (divergence_free_ && r.bilipschitz_M > cfg_.slack * r.gronwall_envelope) r.flags.push_back("bilipschitz_exceeded");
  if (r.grad_v_sup > 0.0) {
    acc_.fit_t.push_back(r.t);
    acc_.fit_log.push_back(std::log(r.grad_v_sup));
  }
  const std::size_t k = acc_.fit_t.size();
  if (k >= 2) {
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < k; ++i) {
      st += acc_.fit_t[i];
      sl += acc_.fit_log[i];
      stt += acc_.fit_t[i] * acc_.fit_t[i];
      stl += acc_.fit_t[i] * acc_.fit_log[i];
    }
    const double den = k * stt - st * st;
    const double b = den > 0.0 ? (k * stl - st * sl) / den : 0.0;
    const double a = (sl - b * st) / k;
    double res = 0.0;
    for (std::size_t i = 0; i < k; ++i) res = std::max(res, std::abs(acc_.fit_log[i] - a - b * acc_.fit_t[i]));
    m.gradv_fit_slope = b;
    m.gradv_fit_residual = res;
  }
  m.det_consistency = s.det_consistency();

  last_ = r;
  records_.push_back(std::move(r));
  monitors_.push_back(m);
  return records_.back();
}

double gronwall_compare(const std::vector<double>& t, const std::vector<double>& u, const std::vector<double>& nt,
                        const std::vector<double>& f) {
  if (t.size() != u.size() || t.size() != nt.size() || t.size() != f.size())
    fail(ErrorCode::dimension_mismatch, "gronwall_compare: series lengths differ");
  require(!t.empty(), "gronwall_compare: empty series");
  double integral = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) integral += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    worst = std::max(worst, u[i] / (nt[i] * std::exp(integral)));
  }
  return worst;
}

namespace {

const char* const kColumns[] = {"t", "grad_X_sup", "grad_X_holder", "grad_v_sup", "support", "x0_drift",
                                "bilipschitz_M", "gronwall_envelope", "G_t"};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  return out;
}

}  // namespace

void emit_csv(const std::vector<DiagnosticsRecord>& records, const std::string& path) {
  require(!records.empty(), "no diagnostics records to write");
  std::ofstream out = open_out(path);
  out << "pfdiag_v1";
  for (const char* c : kColumns) out << ',' << c;
  out << ",flags\n";
  for (const auto& r : records) {
    out << r.step << ',' << fmt(r.t) << ',' << fmt(r.grad_X_sup) << ',' << fmt(r.grad_X_holder) << ','
        << fmt(r.grad_v_sup) << ',' << fmt(r.support) << ',' << fmt(r.x0_drift) << ',' << fmt(r.bilipschitz_M) << ','
        << fmt(r.gronwall_envelope) << ',' << fmt(r.G_t) << ',';
    for (std::size_t i = 0; i < r.flags.size(); ++i) out << (i ? ";" : "") << r.flags[i];
    out << '\n';
  }
  if (!out.flush()) fail(ErrorCode::io, "write failed: " + path);
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("pfdiag_v1,", 0) != 0)
    fail(ErrorCode::io, path + ": not a pfdiag_v1 file");
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 11) fail(ErrorCode::io, path + ": malformed row");
    DiagnosticsRecord r;
    r.step = std::strtol(cells[0].c_str(), nullptr, 10);
    double* fields[] = {&r.t, &r.grad_X_sup, &r.grad_X_holder, &r.grad_v_sup, &r.support,
                        &r.x0_drift, &r.bilipschitz_M, &r.gronwall_envelope, &r.G_t};
    for (int i = 0; i < 9; ++i) *fields[i] = std::strtod(cells[i + 1].c_str(), nullptr);
    std::stringstream fs(cells[10]);
    std::string flag;
    while (std::getline(fs, flag, ';'))
      if (!flag.empty()) r.flags.push_back(flag);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_monitors_csv(const std::vector<MonitorRecord>& records, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "pfmon_v1,t,gronwall_ratio,support_ratio,x0_ratio,holder_ratio,bilipschitz_ratio,gradv_fit_slope,"
         "gradv_fit_residual,det_consistency\n";
  for (const auto& m : records)
    out << m.step << ',' << fmt(m.t) << ',' << fmt(m.gronwall_ratio) << ',' << fmt(m.support_ratio) << ','
        << fmt(m.x0_ratio) << ',' << fmt(m.holder_ratio) << ',' << fmt(m.bilipschitz_ratio) << ','
        << fmt(m.gradv_fit_slope) << ',' << fmt(m.gradv_fit_residual) << ',' << fmt(m.det_consistency) << '\n';
  if (!out.flush()) fail(ErrorCode::io, "write failed: " + path);
}

std::vector<MonitorRecord> read_monitors_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("pfmon_v1,", 0) != 0) fail(ErrorCode::io, path + ": not a pfmon_v1 file");
  std::vector<MonitorRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) fail(ErrorCode::io, path + ": malformed row");
    MonitorRecord m;
    m.step = std::strtol(cells[0].c_str(), nullptr, 10);
    double* fields[] = {&m.t, &m.gronwall_ratio, &m.support_ratio, &m.x0_ratio, &m.holder_ratio,
                        &m.bilipschitz_ratio, &m.gradv_fit_slope, &m.gradv_fit_residual, &m.det_consistency};
    for (int i = 0; i < 9; ++i) *fields[i] = std::strtod(cells[i + 1].c_str(), nullptr);
    out.push_back(m);
  }
  return out;
}

void write_long_format(const std::vector<DiagnosticsRecord>& records, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step,t,quantity,value\n";
  for (const auto& r : records) {
    const double vals[] = {r.grad_X_sup, r.grad_X_holder, r.grad_v_sup, r.support, r.x0_drift,
                           r.bilipschitz_M, r.gronwall_envelope, r.G_t};
    for (int i = 0; i < 8; ++i) out << r.step << ',' << fmt(r.t) << ',' << kColumns[i + 1] << ',' << fmt(vals[i]) << '\n';
    out << r.step << ',' << fmt(r.t) << ",flag_count," << r.flags.size() << '\n';
  }
  if (!out.flush()) fail(ErrorCode::io, "write failed: " + path);
}

}  // namespace patchflow
