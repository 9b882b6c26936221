#include "core/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "core/config.hpp"
#include "core/determinant.hpp"
#include "core/diagnostics.hpp"
#include "core/directional.hpp"
#include "core/inverse_flow.hpp"
#include "core/parallel.hpp"
#include "core/simulation.hpp"
#include "core/sphere.hpp"

#ifndef PATCHFLOW_SCENARIO_DIR
#define PATCHFLOW_SCENARIO_DIR "scenarios"
#endif

namespace patchflow {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::invalid_argument:
    case ErrorCode::dimension_mismatch:
      return 64;
    case ErrorCode::unknown_kernel:
      return 65;
    case ErrorCode::io:
      return 74;
    default:
      return 70;
  }
}

std::string bundled_scenario_dir() { return PATCHFLOW_SCENARIO_DIR; }

std::string resolve_config_path(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(name)) return name;
  std::vector<std::string> dirs;
  if (const char* env = std::getenv("PATCHFLOW_SCENARIO_DIR"); env && *env) dirs.emplace_back(env);
  dirs.push_back(bundled_scenario_dir());
  for (const auto& d : dirs) {
    const fs::path p = fs::path(d) / (name + ".json");
    if (fs::is_regular_file(p)) return p.string();
  }
  fail(ErrorCode::io, "no config file or bundled scenario named '" + name + "'");
}

std::string resolve_output_dir(const std::string& flag, const std::string& config_value) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PATCHFLOW_OUTPUT"); env && *env) return env;
  return config_value;
}

namespace {

std::string num(double v, const char* f = "%.6e") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string point(const double* x, int n) {
  std::string s = "(";
  for (int d = 0; d < n; ++d) s += (d ? ", " : "") + num(x[d], "%.8f");
  return s + ")";
}

// Runs fn and maps library errors to exit codes.
template <class F>
int guarded(const Sink& sink, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    sink.warn(std::string("error [") + to_string(e.code()) + "]: " + e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    sink.warn(std::string("error: ") + e.what());
    return 70;
  }
}

RunConfig load_for(const CommandOptions& opt) {
  if (opt.threads > 0) set_thread_count(opt.threads);
  RunConfig cfg = load_config(resolve_config_path(opt.config));
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.output_dir = resolve_output_dir(opt.output, cfg.output_dir);
  return cfg;
}

class Table {
 public:
  explicit Table(const Sink& s) : sink_(s) {
    sink_.print(line("check", "measured", "bound", "result"));
  }
  void row(const std::string& name, double measured, double bound, bool ok) {
    sink_.print(line(name, num(measured, "%.3e"), num(bound, "%.3e"), ok ? "pass" : "FAIL"));
    all_ok_ = all_ok_ && ok;
  }
  void le(const std::string& name, double measured, double bound) { row(name, measured, bound, measured <= bound); }
  bool ok() const { return all_ok_; }

 private:
  static std::string line(const std::string& a, const std::string& b, const std::string& c, const std::string& d) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-40s %12s %12s  %s", a.c_str(), b.c_str(), c.c_str(), d.c_str());
    return buf;
  }
  const Sink& sink_;
  bool all_ok_ = true;
};

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

double homogeneity_residual(const KernelSpec& k, std::mt19937_64& rng) {
  const int n = k.dimension();
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int trial = 0; trial < 32; ++trial) {
    Vec x(n);
    for (int d = 0; d < n; ++d) x[d] = g(rng);
    for (double lam : {0.25, 0.5, 3.0, 7.5}) {
      const Vec scaled = k.evaluate(Vec(lam * x));
      const Vec expect = std::pow(lam, 1 - n) * k.evaluate(x);
      const double ref = expect.cwiseAbs().maxCoeff();
      if (ref > 0.0) worst = std::max(worst, (scaled - expect).cwiseAbs().maxCoeff() / ref);
    }
  }
  return worst;
}

Mat random_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

// Worst relative error of the cofactor formula against a central difference.
double det_derivative_error(int n, int trials, std::mt19937_64& rng) {
  const double e = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Mat DX = random_matrix(n, rng), DY = random_matrix(n, rng);
    const double exact = det_derivative(DX, DY);
    const double fd = (det(Mat(DX + e * DY)) - det(Mat(DX - e * DY))) / (2 * e);
    worst = std::max(worst, std::abs(exact - fd) / std::abs(fd));
  }
  return worst;
}

std::shared_ptr<const ParticleGeometry> coarse_ball(int n) {
  LatticeOptions lo;
  lo.h = n == 2 ? 1.0 / 8 : 0.25;
  lo.lo.assign(n, -1.0);
  lo.hi.assign(n, 1.0);
  return build_geometry(n, ball_patch(std::vector<double>(n, 0.0), 1.0, 1.0), lo);
}

// Max relative gap between I + II and the Gateaux difference quotient.
double directional_error(const KernelSpec& k, std::shared_ptr<const ParticleGeometry> geom, int trials,
                         std::mt19937_64& rng) {
  const int n = geom->n;
  const FlowState s = FlowState::initial(geom);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Mat A = 0.3 * random_matrix(n, rng);
    Vec w(n);
    for (int d = 0; d < n; ++d) w[d] = 2.0 * u(rng);
    std::vector<double> Y(s.count() * n);
    for (std::size_t p = 0; p < s.count(); ++p) {
      const double* a = &geom->alpha[p * n];
      double phase = 0.0;
      for (int d = 0; d < n; ++d) phase += w[d] * a[d];
      for (int j = 0; j < n; ++j) {
        double y = 0.1 * std::sin(phase + j);
        for (int i = 0; i < n; ++i) y += A(i, j) * a[i];
        Y[p * n + j] = y;
      }
    }
    const DirectionalResult r = directional_derivative(s, k, Y, {});
    const std::vector<double> fd = gateaux_difference(s, k, Y, r.DY, {}, 1e-6);
    const std::vector<double> tot = r.total();
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      diff = std::max(diff, std::abs(tot[i] - fd[i]));
      ref = std::max(ref, std::abs(fd[i]));
    }
    worst = std::max(worst, diff / ref);
  }
  return worst;
}

double roundtrip_error(const KernelSpec& k, const SphereIntegrals& si, std::shared_ptr<const ParticleGeometry> geom) {
  const int n = geom->n;
  TimeIntegratorConfig tc;
  tc.dt = 0.01;
  Flow flow(FlowState::initial(geom), make_model(k, si.c, QuadratureConfig{}), tc, true);
  flow.advance(10);
  const HistoryVelocity hv(geom, flow.model(), flow.history(), tc.jacobian_mode);
  const InverseFlowResult inv = inverse_flow(hv, flow.state().X);
  double worst = 0.0;
  for (std::size_t p = 0; p < geom->count(); ++p) {
    double e2 = 0.0;
    for (int d = 0; d < n; ++d) e2 += std::pow(inv.alpha[p * n + d] - geom->alpha[p * n + d], 2);
    worst = std::max(worst, std::sqrt(e2));
  }
  return worst;
}

double constant_inverse_error(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(n), times, probes(20 * n);
  for (auto& x : c) x = u(rng);
  for (auto& x : probes) x = 3.0 * u(rng);
  for (int i = 0; i <= 10; ++i) times.push_back(0.1 * i);
  const ConstantVelocity v(c, times);
  const InverseFlowResult inv = inverse_flow(v, probes);
  double worst = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) worst = std::max(worst, std::abs(inv.alpha[i] - (probes[i] - c[i % n])));
  return worst;
}

}  // namespace

int cmd_simulate(const CommandOptions& opt, const Sink& sink) {
  return guarded(sink, [&] {
    const RunConfig cfg = load_for(opt);
    const int n = cfg.dimension;
    RunOptions ro;
    ro.output_dir = cfg.output_dir;
    ro.resume = opt.resume;
    ro.log = sink.err;
    const auto t0 = std::chrono::steady_clock::now();
    const RunReport r = run_simulation(cfg, ro);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    sink.print("output " + cfg.output_dir);
    sink.print("particles " + std::to_string(r.particles) + "  steps " + std::to_string(r.steps) + "  t " +
               num(r.t, "%.6g") + "  wall " + num(secs, "%.1f") + " s");
    for (std::size_t i = 0; i + n <= r.probe_velocity.size(); i += n)
      sink.print("velocity at " + point(&cfg.report.velocity_probes[i], n) + " = " + point(&r.probe_velocity[i], n));
    for (std::size_t i = 0; i + n <= r.tracer_X.size(); i += n) {
      double rad = 0.0;
      for (int d = 0; d < n; ++d) rad += r.tracer_X[i + d] * r.tracer_X[i + d];
      sink.print("tracer " + point(&cfg.tracers[i], n) + " -> " + point(&r.tracer_X[i], n) + "  radius " +
                 num(std::sqrt(rad), "%.8f"));
    }
    sink.print("support " + num(r.support0, "%.8g") + " -> " + num(r.support_final, "%.8g") + "  relative change " +
               num(r.support0 > 0 ? r.support_final / r.support0 - 1.0 : 0.0, "%.3e"));
    if (r.density_l1) sink.print("density L1 error " + num(*r.density_l1 * 100.0, "%.4f") + " %");
    if (r.roundtrip) sink.print("roundtrip max |X^-1(X(alpha)) - alpha| " + num(*r.roundtrip, "%.3e"));
    if (r.inverse_flags) sink.print("probes outside the source box: " + std::to_string(r.inverse_flags));
    if (!r.flags.empty()) {
      std::string f = "flags";
      for (const auto& s : r.flags) f += " " + s;
      sink.print(f);
    }
    if (r.exit_code == 2) sink.warn("stopped: " + r.message);
    return r.exit_code;
  });
}

int cmd_verify(const CommandOptions& opt, const Sink& sink) {
  return guarded(sink, [&] {
    const RunConfig cfg = load_for(opt);
    const int n = cfg.dimension;
    const KernelSpec k = make_kernel(cfg);
    std::mt19937_64 rng(cfg.seed);
    Table tab(sink);

    const auto t0 = std::chrono::steady_clock::now();
    const SphereIntegrals si = sphere_integrals(k, cfg.sphere_nodes > 0 ? cfg.sphere_nodes : default_sphere_nodes(n));
    const double sphere_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double tol = n == 2 ? 1e-10 : n == 3 ? 1e-6 : std::max(1e-6, 4.0 * si.statistical_error);
    if (k.has_linear_profile()) {
      // For k = M x |x|^-n the sphere constants are M^T |S^{n-1}| / n.
      const Mat expect = k.profile_matrix().transpose() * sphere_area(n) / n;
      tab.le("c_matrix vs M^T sigma/n", max_abs(si.c - expect), tol);
    }
    std::string cm = "c =";
    for (int i = 0; i < n && n <= 4; ++i) {
      cm += " [";
      for (int j = 0; j < n; ++j) cm += (j ? ", " : "") + num(si.c(i, j), "%.12f");
      cm += "]";
    }
    sink.print(cm);
    tab.le("sphere_quadrature_seconds", sphere_secs, 1.0);
    tab.le("zero_mean_residual", max_abs(si.zero_mean_residual), tol);
    tab.le("sphere_refinement_change", si.refinement_change, si.tolerance);
    tab.le("homogeneity_residual", homogeneity_residual(k, rng), 1e-12);

    for (int m : {2, 3, 4}) {
      const auto s0 = std::chrono::steady_clock::now();
      const double err = det_derivative_error(m, 100, rng);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
      tab.le("det_derivative_n" + std::to_string(m) + " (100 pairs)", err, 1e-6);
      tab.le("det_derivative_n" + std::to_string(m) + "_seconds", secs, 1.0);
    }
    double sum_err = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Mat A = random_matrix(n, rng), B = random_matrix(n, rng);
      const double ref = det(Mat(A + B));
      sum_err = std::max(sum_err, std::abs(det_sum_expansion(A, B) - ref) / std::max(std::abs(ref), 1e-300));
    }
    tab.le("det_sum_expansion", sum_err, 1e-10);

    const auto geom = coarse_ball(n);
    tab.le("directional_derivative (" + std::to_string(geom->count()) + " particles)",
           directional_error(k, geom, 3, rng), 1e-3);
    tab.le("inverse_flow_constant_velocity", constant_inverse_error(n, rng), 1e-12);
    tab.le("inverse_flow_roundtrip", roundtrip_error(k, si, geom), 1e-4);

    // Pairwise inequalities on one pair set: product rule and composition.
    const double gamma = cfg.gamma;
    std::vector<double> lo(n, -1.0), hi(n, 1.0);
    const ScalarField grid = sample_grid_field(n, lo, hi, n == 2 ? 0.05 : 0.2, [](const double*) { return 0.0; });
    const PairList pairs = select_pairs(n, grid.points, grid.h, 20000, cfg.seed);
    std::vector<double> f(grid.size()), g(grid.size()), fg(grid.size()), mapped(grid.points.size()), fX(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double* x = grid.point(p);
      f[p] = std::sin(3.0 * x[0]) + std::sqrt(std::abs(x[1]));
      g[p] = std::cos(2.0 * x[1]) * (1.0 + x[0] * x[0]);
      fg[p] = f[p] * g[p];
      for (int d = 0; d < n; ++d) mapped[p * n + d] = x[d] + 0.2 * std::sin(2.0 * x[(d + 1) % n]);
      fX[p] = std::sqrt(std::abs(mapped[p * n])) + mapped[p * n + 1];
    }
    auto sup = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s = std::max(s, std::abs(x));
      return s;
    };
    const double prod_lhs = seminorm_on_pairs(n, grid.points, fg, pairs, gamma);
    const double prod_rhs = sup(f) * seminorm_on_pairs(n, grid.points, g, pairs, gamma) +
                            seminorm_on_pairs(n, grid.points, f, pairs, gamma) * sup(g);
    tab.le("holder_product_rule", prod_lhs, prod_rhs * (1.0 + 1e-12));
    const double comp_lhs = seminorm_on_pairs(n, grid.points, fX, pairs, gamma);
    const double comp_rhs = seminorm_on_pairs(n, mapped, fX, pairs, gamma) *
                            std::pow(lipschitz_on_pairs(n, grid.points, mapped, n, pairs), gamma);
    tab.le("holder_composition", comp_lhs, comp_rhs * (1.0 + 1e-12));

    // Gronwall comparison in its equality case u = n exp(int f).
    std::vector<double> ts, u, nt, fv;
    double integral = 0.0;
    for (int i = 0; i <= 50; ++i) {
      const double t = 0.02 * i;
      const double fi = 1.0 + std::sin(3.0 * t);
      if (i > 0) integral += 0.5 * (fv.back() + fi) * 0.02;
      ts.push_back(t);
      fv.push_back(fi);
      nt.push_back(2.0 + t);
      u.push_back(nt.back() * std::exp(integral));
    }
    tab.le("gronwall_equality_case", std::abs(gronwall_compare(ts, u, nt, fv) - 1.0), 1e-12);

    sink.print(tab.ok() ? "all checks passed" : "some checks FAILED");
    return tab.ok() ? 0 : 1;
  });
}

int cmd_kernel_info(const std::string& name, int n, const std::vector<double>& params, const std::string& output,
                    const Sink& sink) {
  return guarded(sink, [&] {
    const KernelSpec k = builtin_kernel(name, n, params);
    const SphereIntegrals si = sphere_integrals(k, default_sphere_nodes(n));
    std::mt19937_64 rng(0);
    const double hom = homogeneity_residual(k, rng);
    const Mat anti = 0.5 * (si.c - si.c.transpose());
    sink.print("kernel " + name + "  n " + std::to_string(n));
    sink.print("homogeneity residual " + num(hom, "%.3e"));
    for (int i = 0; i < n; ++i) {
      std::string row = i == 0 ? "c = [" : "    [";
      for (int j = 0; j < n; ++j) row += (j ? ", " : "") + num(si.c(i, j), "%.12f");
      sink.print(row + "]");
    }
    sink.print("trace(c) " + num(divergence_constant(si), "%.12f"));
    sink.print("antisymmetric part magnitude " + num(anti.cwiseAbs().maxCoeff(), "%.12f"));
    sink.print("zero-mean residual " + num(max_abs(si.zero_mean_residual), "%.3e"));
    double xi_max = 0.0, xi_sq = 0.0;
    for (double x : si.xi) {
      xi_max = std::max(xi_max, std::abs(x));
      xi_sq += x * x;
    }
    sink.print("xi norms: max " + num(xi_max, "%.6e") + "  frobenius " + num(std::sqrt(xi_sq), "%.6e"));

    const std::string dir = resolve_output_dir(output, "patchflow_out");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string path = (std::filesystem::path(dir) / ("kernel_info_" + name + "_" + std::to_string(n) + ".csv")).string();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) fail(ErrorCode::io, "cannot write " + path);
    std::fprintf(f, "quantity,i,j,value\n");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) std::fprintf(f, "c,%d,%d,%.17g\n", i, j, si.c(i, j));
    std::fprintf(f, "trace,,,%.17g\n", divergence_constant(si));
    std::fprintf(f, "antisymmetric_max,,,%.17g\n", anti.cwiseAbs().maxCoeff());
    std::fprintf(f, "homogeneity_residual,,,%.17g\n", hom);
    std::fprintf(f, "zero_mean_residual,,,%.17g\n", max_abs(si.zero_mean_residual));
    std::fprintf(f, "xi_max,,,%.17g\n", xi_max);
    std::fprintf(f, "xi_frobenius,,,%.17g\n", std::sqrt(xi_sq));
    if (std::fclose(f) != 0) fail(ErrorCode::io, "write failed: " + path);
    sink.print("wrote " + path);
    return 0;
  });
}

int cmd_report(const std::string& csv, const std::string& output, const Sink& sink) {
  return guarded(sink, [&] {
    const auto records = read_diagnostics_csv(csv);
    const std::string dir = resolve_output_dir(output, std::filesystem::path(csv).parent_path().string());
    const std::filesystem::path base = dir.empty() ? std::filesystem::path(".") : std::filesystem::path(dir);
    std::error_code ec;
    std::filesystem::create_directories(base, ec);
    const std::string path = (base / (std::filesystem::path(csv).stem().string() + "_long.csv")).string();
    write_long_format(records, path);
    sink.print("wrote " + path + " (" + std::to_string(records.size()) + " records)");
    return 0;
  });
}

}  // namespace patchflow
