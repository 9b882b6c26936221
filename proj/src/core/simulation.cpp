#include "core/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/flow.hpp"
#include "core/inverse_flow.hpp"
#include "core/snapshot.hpp"

namespace patchflow {

KernelSpec make_kernel(const RunConfig& cfg) { return builtin_kernel(cfg.kernel, cfg.dimension, cfg.kernel_params); }

std::vector<double> probe_grid(const std::vector<double>& lo, const std::vector<double>& hi, int per_axis) {
  const int n = static_cast<int>(lo.size());
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= static_cast<std::size_t>(per_axis);
  std::vector<double> pts(total * n);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rem = p;
    for (int d = n - 1; d >= 0; --d) {
      const double step = (hi[d] - lo[d]) / per_axis;
      pts[p * n + d] = lo[d] + (static_cast<double>(rem % per_axis) + 0.5) * step;
      rem /= per_axis;
    }
  }
  return pts;
}

namespace {

void say(const RunOptions& opt, const std::string& s) {
  if (opt.log) opt.log(s);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Paths {
  std::string dir, diagnostics, monitors, summary;
  explicit Paths(const std::string& d)
      : dir(d),
        diagnostics((std::filesystem::path(d) / "diagnostics.csv").string()),
        monitors((std::filesystem::path(d) / "monitors.csv").string()),
        summary((std::filesystem::path(d) / "summary.json").string()) {}
};

void write_tables(const Paths& p, const DiagnosticsMonitor& mon) {
  emit_csv(mon.records(), p.diagnostics);
  emit_monitors_csv(mon.monitors(), p.monitors);
}

// Relative L1 mismatch over the probe cells.
double l1_mismatch(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += std::abs(a[i] - b[i]);
    ref += std::abs(b[i]);
  }
  return ref > 0.0 ? diff / ref : diff;
}

void write_summary(const Paths& p, const RunConfig& cfg, const RunReport& r) {
  using json = nlohmann::json;
  json j;
  j["format"] = "pfsummary_v1";
  j["config"] = cfg.source_path;
  j["kernel"] = cfg.kernel;
  j["dimension"] = cfg.dimension;
  j["exit_code"] = r.exit_code;
  if (!r.message.empty()) j["message"] = r.message;
  j["steps"] = r.steps;
  j["t"] = r.t;
  j["particles"] = r.particles;
  j["resumed"] = r.resumed;
  const int n = cfg.dimension;
  json tr = json::array();
  for (std::size_t i = 0; i + n <= r.tracer_X.size(); i += n)
    tr.push_back(std::vector<double>(r.tracer_X.begin() + i, r.tracer_X.begin() + i + n));
  j["tracers"] = tr;
  json pv = json::array();
  for (std::size_t i = 0; i + n <= r.probe_velocity.size(); i += n)
    pv.push_back(std::vector<double>(r.probe_velocity.begin() + i, r.probe_velocity.begin() + i + n));
  j["probe_velocity"] = pv;
  j["density_l1"] = r.density_l1 ? json(*r.density_l1) : json(nullptr);
  j["roundtrip"] = r.roundtrip ? json(*r.roundtrip) : json(nullptr);
  j["inverse_flow_flags"] = r.inverse_flags;
  j["support0"] = r.support0;
  j["support_final"] = r.support_final;
  j["flags"] = r.flags;
  j["slack"] = cfg.slack;
  std::ofstream out(p.summary, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + p.summary);
  out << j.dump(2) << '\n';
  if (!out.flush()) fail(ErrorCode::io, "write failed: " + p.summary);
}

}  // namespace

RunReport run_simulation(const RunConfig& cfg, const RunOptions& opt) {
  const Paths paths(opt.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(paths.dir, ec);
  if (ec || !std::filesystem::is_directory(paths.dir))
    fail(ErrorCode::io, "cannot create output directory " + paths.dir);

  const int n = cfg.dimension;
  const KernelSpec k = make_kernel(cfg);
  const SphereIntegrals si = sphere_integrals(k, cfg.sphere_nodes > 0 ? cfg.sphere_nodes : default_sphere_nodes(n));
  auto geom = build_geometry(n, make_density(cfg.density, n), lattice_options(cfg));
  const FlowModel model = make_model(k, si.c, cfg.quad);

  // The origin tracer follows X(0, t) for the drift check.
  std::vector<double> tracers = cfg.tracers;
  tracers.insert(tracers.end(), n, 0.0);
  const std::size_t user_tracers = cfg.tracers.size();

  RunReport rep;
  rep.particles = geom->count();
  DiagnosticsMonitor mon(geom, k, si, diagnostics_config(cfg));

  FlowState start = FlowState::initial(geom, tracers);
  if (opt.resume) {
    const std::string snap_path = latest_snapshot(paths.dir);
    if (snap_path.empty()) fail(ErrorCode::io, "no snapshot to resume from in " + paths.dir);
    const Snapshot snap = read_snapshot(snap_path);
    start = restore_state(geom, snap);
    auto records = read_diagnostics_csv(paths.diagnostics);
    auto monitors = read_monitors_csv(paths.monitors);
    auto keep = [&](auto& v) {
      v.erase(std::remove_if(v.begin(), v.end(), [&](const auto& r) { return r.step > snap.step; }), v.end());
    };
    keep(records);
    keep(monitors);
    if (records.empty()) fail(ErrorCode::io, paths.diagnostics + " has no rows up to the snapshot step");
    mon.restore(MonitorState::unpack(snap.monitor), std::move(records), std::move(monitors));
    rep.resumed = true;
    say(opt, "resuming from " + snap_path + " at step " + std::to_string(snap.step));
  }

  const long total_steps = std::max(0L, std::lround(cfg.t_end / cfg.time.dt));
  // The inverse flow needs every checkpoint from t = 0, which a resumed run no longer has.
  const bool need_history = !rep.resumed && (cfg.report.density || cfg.report.roundtrip);
  Flow flow(std::move(start), model, cfg.time, need_history);

  if (!cfg.report.velocity_probes.empty() && !rep.resumed)
    rep.probe_velocity = velocity_from_state(flow.state(), model, cfg.report.velocity_probes);

  auto x0 = [&] { return &flow.state().tracer_X[user_tracers]; };
  auto record = [&] { mon.record(flow.state(), flow.current().G, x0()); };
  if (!rep.resumed) record();
  say(opt, "particles " + std::to_string(geom->count()) + ", steps " + std::to_string(total_steps));

  bool lost = false;
  while (flow.state().step < total_steps) {
    try {
      flow.step();
    } catch (const OrientationLost& e) {
      lost = true;
      rep.exit_code = 2;
      rep.message = e.what();
      say(opt, std::string("orientation lost: ") + e.what());
      break;
    }
    const long s = flow.state().step;
    if (s % cfg.every_n_steps == 0 || s == total_steps) record();
    if (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0 && s != total_steps) {
      write_snapshot(snapshot_path(paths.dir, s), flow.state(), mon.state());
      write_tables(paths, mon);
    }
    if (total_steps >= 10 && s % (total_steps / 10) == 0)
      say(opt, "step " + std::to_string(s) + "/" + std::to_string(total_steps) + " t=" + fmt(flow.state().t));
  }
  // The last state is always recorded before the final snapshot.
  if (mon.records().back().step != flow.state().step) record();
  write_snapshot(snapshot_path(paths.dir, flow.state().step), flow.state(), mon.state());
  write_tables(paths, mon);

  const FlowState& fin = flow.state();
  rep.steps = fin.step;
  rep.t = fin.t;
  rep.tracer_X.assign(fin.tracer_X.begin(), fin.tracer_X.begin() + user_tracers);
  rep.records = mon.records();
  rep.monitors = mon.monitors();
  rep.support0 = rep.records.front().support;
  rep.support_final = rep.records.back().support;
  std::set<std::string> flags;
  for (const auto& r : rep.records) flags.insert(r.flags.begin(), r.flags.end());
  rep.flags.assign(flags.begin(), flags.end());

  if (!lost && need_history && fin.count() > 0) {
    const HistoryVelocity hv(geom, flow.model(), flow.history(), cfg.time.jacobian_mode);
    if (cfg.report.roundtrip) {
      say(opt, "inverse flow of " + std::to_string(fin.count()) + " particles");
      const InverseFlowResult inv = inverse_flow(hv, fin.X);
      double worst = 0.0;
      for (std::size_t p = 0; p < fin.count(); ++p) {
        double e2 = 0.0;
        for (int d = 0; d < n; ++d) e2 += std::pow(inv.alpha[p * n + d] - geom->alpha[p * n + d], 2);
        worst = std::max(worst, std::sqrt(e2));
      }
      rep.roundtrip = worst;
    }
    if (cfg.report.density) {
      const ReportSpec& rs = cfg.report;
      const std::vector<double> probes = probe_grid(rs.probe_lo, rs.probe_hi, rs.probes_per_axis);
      say(opt, "inverse flow of " + std::to_string(probes.size() / n) + " density probes");
      const InverseFlowResult inv = inverse_flow(hv, probes);
      for (char c : inv.left_support) rep.inverse_flags += c ? 1 : 0;
      const ScalarField rho = transported_density(*geom, inv, probes, (rs.probe_hi[0] - rs.probe_lo[0]) / rs.probes_per_axis);
      if (rs.reference) {
        const InitialDensity ref = make_density(*rs.reference, n);
        std::vector<double> expect(rho.size());
        if (!ref.rho) fail(ErrorCode::config, "reference density must be an analytic patch");
        for (std::size_t p = 0; p < rho.size(); ++p) expect[p] = ref.rho(&probes[p * n]);
        rep.density_l1 = l1_mismatch(rho.values, expect);
      }
    }
  }
  write_summary(paths, cfg, rep);
  return rep;
}

}  // namespace patchflow
