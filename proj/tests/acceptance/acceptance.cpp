// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance <scenario_dir> <work_dir>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "core/config.hpp"
#include "core/determinant.hpp"
#include "core/directional.hpp"
#include "core/parallel.hpp"
#include "core/picard.hpp"
#include "core/simulation.hpp"
#include "core/sphere.hpp"

using namespace patchflow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Mat random_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

struct Bench {
  RunConfig cfg;
  RunReport rep;
  double seconds = 0.0;
};

Bench run_scenario(const fs::path& scenarios, const std::string& name, const fs::path& work) {
  Bench b;
  b.cfg = load_config((scenarios / (name + ".json")).string());
  RunOptions ro;
  ro.output_dir = (work / name).string();
  fs::remove_all(ro.output_dir);
  ro.log = [&](const std::string& s) { std::fprintf(stderr, "[%s] %s\n", name.c_str(), s.c_str()); };
  const auto t0 = Clock::now();
  b.rep = run_simulation(b.cfg, ro);
  b.seconds = seconds_since(t0);
  return b;
}

void criterion_sphere_constants() {
  const auto t0 = Clock::now();
  const SphereIntegrals bs = sphere_integrals(builtin_kernel("biot_savart", 2), 4096);
  const double secs = seconds_since(t0);
  Mat expect(2, 2);
  expect << 0.0, 0.5, -0.5, 0.0;
  const double err = (bs.c - expect).cwiseAbs().maxCoeff();
  const SphereIntegrals ag = sphere_integrals(builtin_kernel("aggregation", 3), default_sphere_nodes(3));
  const double tr = std::abs(divergence_constant(ag) + 1.0);
  report(1, "sphere_constants", err <= 1e-10 && secs < 1.0 && tr <= 1e-6,
         "biot_savart |c - ref| " + fmt("%.2e", err) + " in " + fmt("%.3f", secs) + " s; aggregation n=3 |trace + 1| " +
             fmt("%.2e", tr));
}

void criterion_zero_mean() {
  double r2 = 0.0;
  for (const KernelSpec& k : {builtin_kernel("biot_savart", 2), builtin_kernel("aggregation", 2),
                              builtin_kernel("mixed2d", 2, {1.0, 1.0})})
    r2 = std::max(r2, sphere_integrals(k, default_sphere_nodes(2)).zero_mean_residual.cwiseAbs().maxCoeff());
  const double r3 =
      sphere_integrals(builtin_kernel("aggregation", 3), default_sphere_nodes(3)).zero_mean_residual.cwiseAbs().maxCoeff();
  report(2, "zero_sphere_mean", r2 <= 1e-10 && r3 <= 1e-6,
         "max residual n=2 " + fmt("%.2e", r2) + ", n=3 " + fmt("%.2e", r3));
}

void criterion_det_derivative() {
  std::mt19937_64 rng(2024);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int passed = 0;
  const double e = 1e-5;
  for (int n : {2, 3, 4}) {
    for (int t = 0; t < 100; ++t) {
      const Mat DX = random_matrix(n, rng), DY = random_matrix(n, rng);
      const double exact = det_derivative(DX, DY);
      const double fd = (det(Mat(DX + e * DY)) - det(Mat(DX - e * DY))) / (2 * e);
      const double rel = std::abs(exact - fd) / std::abs(fd);
      worst = std::max(worst, rel);
      passed += rel <= 1e-6;
    }
  }
  const double secs = seconds_since(t0);
  report(3, "det_derivative", passed == 300 && secs < 1.0,
         std::to_string(passed) + "/300 pairs, worst relative error " + fmt("%.2e", worst) + ", " + fmt("%.4f", secs) + " s");
}

void criterion_rankine(const Bench& b) {
  const auto& r = b.rep;
  double probe = 0.0;
  for (std::size_t i = 0; i + 1 < r.probe_velocity.size(); i += 2)
    probe = std::max({probe, std::abs(r.probe_velocity[i]), std::abs(r.probe_velocity[i + 1] - 0.25)});
  const double l1 = r.density_l1.value_or(INFINITY);
  const double drift = std::abs(r.support_final / r.support0 - 1.0);
  const bool ok = r.exit_code == 0 && r.probe_velocity.size() == 4 && probe <= 1e-3 && l1 <= 0.02 && drift <= 0.005 &&
                  b.seconds <= 600.0;
  report(4, "rankine_benchmark", ok,
         "probe error " + fmt("%.2e", probe) + ", density L1 " + fmt("%.3f", 100 * l1) + " %, support drift " +
             fmt("%.2e", drift) + ", " + fmt("%.0f", b.seconds) + " s");
}

void criterion_aggregation(const Bench& b) {
  const auto& r = b.rep;
  const double* x = r.tracer_X.data();  // first tracer starts at (1, 0, 0)
  const double rad = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  const double rad_err = std::abs(rad - std::exp(-1.0 / 3.0));
  const double vol = 4.0 * M_PI / 3.0 * std::exp(-1.0);
  const double vol_err = std::abs(r.support_final / vol - 1.0);
  report(5, "aggregation_collapse", r.exit_code == 0 && rad_err <= 1e-3 && vol_err <= 0.02,
         "boundary radius " + fmt("%.6f", rad) + " (error " + fmt("%.2e", rad_err) + "), support volume error " +
             fmt("%.3f", 100 * vol_err) + " %");
}

void criterion_monitors(const Bench& a, const Bench& b) {
  double g = 0.0, s = 0.0;
  std::size_t rows = 0;
  for (const Bench* x : {&a, &b})
    for (const auto& m : x->rep.monitors) {
      g = std::max(g, m.gronwall_ratio);
      s = std::max(s, m.support_ratio);
      ++rows;
    }
  report(6, "gronwall_monitor", rows > 0 && g <= 1.01,
         "max |grad X| / exp(int |grad v|) " + fmt("%.6f", g) + " over " + std::to_string(rows) + " records");
  report(7, "support_growth", rows > 0 && s <= 1.0, "max support / Hadamard bound " + fmt("%.6f", s));
}

void criterion_roundtrip(const Bench& b) {
  const double rt = b.rep.roundtrip.value_or(INFINITY);
  report(8, "inverse_flow_roundtrip", rt <= 1e-4, "max |X^-1(X(alpha,1),1) - alpha| " + fmt("%.2e", rt));
}

void criterion_picard(const RunConfig& cfg) {
  const KernelSpec k = make_kernel(cfg);
  const SphereIntegrals si = sphere_integrals(k, default_sphere_nodes(cfg.dimension));
  auto geom = build_geometry(cfg.dimension, make_density(cfg.density, cfg.dimension), lattice_options(cfg));
  const FlowModel m = make_model(k, si.c, cfg.quad);
  const FlowState s0 = FlowState::initial(geom);

  const PicardResult wide = picard_iterate(s0, m, 0.05, 6, cfg.time.picard_nodes, JacobianMode::variational);
  double worst_ratio = 0.0;
  bool enough = wide.distances.size() >= 5;
  for (std::size_t j = 0; enough && j < 4; ++j)
    worst_ratio = std::max(worst_ratio, wide.distances[j + 1] / wide.distances[j]);

  const PicardResult fine = picard_iterate(s0, m, 0.01, 30, cfg.time.picard_nodes, JacobianMode::variational, 1e-15);
  TimeIntegratorConfig tc;
  tc.dt = 0.01;
  Flow rk(s0, m, tc);
  rk.step();
  double gap = 0.0;
  for (std::size_t i = 0; i < s0.X.size(); ++i) gap = std::max(gap, std::abs(fine.end.X[i] - rk.state().X[i]));
  report(9, "picard_contraction", enough && !wide.diverged && worst_ratio <= 0.5 && gap <= 1e-8,
         "worst of the first 4 ratios " + fmt("%.3f", worst_ratio) + ", fixed point vs rk4 " + fmt("%.2e", gap));
}

double directional_case(const std::string& kernel, int n, int trials, std::size_t max_targets, std::mt19937_64& rng) {
  LatticeOptions lo;
  lo.h = 2.0 / 32;
  lo.lo.assign(n, -1.0);
  lo.hi.assign(n, 1.0);
  auto geom = build_geometry(n, ball_patch(std::vector<double>(n, 0.0), 1.0, 1.0), lo);
  const FlowState s = FlowState::initial(geom);
  const KernelSpec k = builtin_kernel(kernel, n);
  std::vector<std::size_t> targets;
  const std::size_t stride = std::max<std::size_t>(1, s.count() / max_targets);
  for (std::size_t p = 0; p < s.count(); p += stride) targets.push_back(p);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Mat A = 0.3 * random_matrix(n, rng);
    std::vector<double> w(n);
    for (auto& x : w) x = 3.0 * u(rng);
    std::vector<double> Y(s.count() * n);
    for (std::size_t p = 0; p < s.count(); ++p) {
      const double* a = &geom->alpha[p * n];
      double phase = 0.0;
      for (int d = 0; d < n; ++d) phase += w[d] * a[d];
      for (int j = 0; j < n; ++j) {
        double y = 0.2 * std::sin(phase + 1.7 * j);
        for (int i = 0; i < n; ++i) y += A(i, j) * a[i];
        Y[p * n + j] = y;
      }
    }
    const DirectionalResult r = directional_derivative(s, k, Y, targets);
    const auto fd = gateaux_difference(s, k, Y, r.DY, targets, 1e-6);
    const auto tot = r.total();
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      diff = std::max(diff, std::abs(tot[i] - fd[i]));
      ref = std::max(ref, std::abs(fd[i]));
    }
    worst = std::max(worst, diff / ref);
  }
  return worst;
}

void criterion_directional() {
  std::mt19937_64 rng(77);
  const double e2 = directional_case("biot_savart", 2, 10, 1u << 20, rng);
  const double e3 = directional_case("aggregation", 3, 10, 256, rng);
  report(10, "directional_derivative", e2 <= 1e-3 && e3 <= 1e-3,
         "worst relative error n=2 " + fmt("%.2e", e2) + ", n=3 " + fmt("%.2e", e3) + " (10 perturbations each)");
}

void criterion_determinism(const fs::path& scenarios, const fs::path& work) {
  // Shortened Rankine run: the reductions are the same as in the full one.
  RunConfig cfg = load_config((scenarios / "rankine.json").string());
  cfg.h = 1.0 / 32;
  cfg.t_end = 0.1;
  cfg.report = ReportSpec{};
  std::vector<std::string> diag, mon;
  for (int t : {1, 2, 8}) {
    set_thread_count(t);
    RunOptions ro;
    ro.output_dir = (work / ("threads_" + std::to_string(t))).string();
    fs::remove_all(ro.output_dir);
    run_simulation(cfg, ro);
    diag.push_back(slurp(fs::path(ro.output_dir) / "diagnostics.csv"));
    mon.push_back(slurp(fs::path(ro.output_dir) / "monitors.csv"));
  }
  set_thread_count(1);
  const bool ok = !diag[0].empty() && diag[0] == diag[1] && diag[0] == diag[2] && mon[0] == mon[1] && mon[0] == mon[2];
  report(11, "determinism", ok, "diagnostics.csv and monitors.csv bytes for threads 1, 2, 8 " +
                                    std::string(ok ? "identical" : "differ"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <scenario_dir> <work_dir>\n");
    return 2;
  }
  const fs::path scenarios = argv[1], work = argv[2];
  fs::create_directories(work);
  try {
    criterion_sphere_constants();
    criterion_zero_mean();
    criterion_det_derivative();
    const Bench rankine = run_scenario(scenarios, "rankine", work);
    criterion_rankine(rankine);
    const Bench agg = run_scenario(scenarios, "agg3d_collapse", work);
    criterion_aggregation(agg);
    criterion_monitors(rankine, agg);
    criterion_roundtrip(agg);
    criterion_picard(agg.cfg);
    criterion_directional();
    criterion_determinism(scenarios, work);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED");
  return failures ? 1 : 0;
}
