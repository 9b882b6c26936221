#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/fields.hpp"
#include "core/flow.hpp"
#include "core/sphere.hpp"

namespace patchflow {

struct DiagnosticsRecord {
  long step = 0;
  double t = 0.0;
  double grad_X_sup = 0.0;     // max |DX(i,j)| over particles
  double grad_X_holder = 0.0;  // max over the pair set of |DX_p - DX_q|_max / |alpha_p - alpha_q|^gamma
  double grad_v_sup = 0.0;     // max |d_i v_j| over particles
  double support = 0.0;        // sum of occupancy h^n det over the support
  double x0_drift = 0.0;       // |X(0, t)|
  double bilipschitz_M = 1.0;
  double gronwall_envelope = 1.0;
  double G_t = 0.0;            // outer constant c = 1
  std::vector<std::string> flags;
};

/// Ratios of the monitored quantities to their bounds (all <= 1 when the
/// corresponding inequality holds without slack).
struct MonitorRecord {
  long step = 0;
  double t = 0.0;
  double gronwall_ratio = 0.0;
  double support_ratio = 0.0;
  double x0_ratio = 0.0;
  double holder_ratio = 0.0;
  double bilipschitz_ratio = 0.0;
  double gradv_fit_slope = 0.0;
  double gradv_fit_residual = 0.0;
  double det_consistency = 0.0;
};

struct DiagnosticsConfig {
  double gamma = 0.5;
  double slack = 1.01;
  std::size_t pair_budget = 200000;
  std::uint64_t seed = 0;
};

/// Constant of |v| <= c(n) m(supp rho)^{1/n} ||rho||_inf: the ball of equal
/// measure maximizes int |x-y|^{1-n}, giving K sigma w_n^{-1/n} with K the
/// sphere maximum of |k|; the Hadamard bound on the support adds sqrt(n).
double drift_bound_constant(const KernelSpec& k, int nodes = 0);

/// Running accumulators, enough to continue a monitor after a restart.
struct MonitorState {
  double int_grad_v = 0.0;
  double int_grad_X = 0.0;
  double G_t = 0.0;
  double last_g = 0.0;  // integrand of G at the last record
  double support0 = 0.0;
  double rho0_holder = 0.0;
  std::vector<double> fit_t, fit_log;  // for the log(grad_v_sup) fit
  bool started = false;

  std::vector<double> pack() const;
  static MonitorState unpack(const std::vector<double>& v);
};

/// Per-step diagnostics and bound checks:
///   (i)   grad_X_sup <= slack * exp(int grad_v_sup)
///   (ii)  support <= n^{n/2} support(0) grad_X_sup^n
///   (iii) x0_drift <= slack * c(n) support(0)^{1/n} ||rho0||_inf int grad_X_sup
///   (iv)  log grad_v_sup against a linear fit in t (residual monitored)
/// Divergence-free kernels also check M <= slack * exp(int grad_v_sup).
class DiagnosticsMonitor {
 public:
  DiagnosticsMonitor(std::shared_ptr<const ParticleGeometry> g, const KernelSpec& k, const SphereIntegrals& si,
                     DiagnosticsConfig cfg);

  /// Records the state. G is d_i v_j at the particles (count*n*n); x0 is X(0, t).
  const DiagnosticsRecord& record(const FlowState& s, const std::vector<double>& G, const double* x0);

  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  const std::vector<MonitorRecord>& monitors() const { return monitors_; }
  const MonitorState& state() const { return acc_; }
  /// Continues a monitor from a snapshot; `records` and `monitors` are the
  /// rows written up to the snapshot step (the last record is the base of
  /// the next time-integral increment).
  void restore(const MonitorState& st, std::vector<DiagnosticsRecord> records, std::vector<MonitorRecord> monitors);
  double bound_constant() const { return c_drift_; }
  const DiagnosticsConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<const ParticleGeometry> g_;
  DiagnosticsConfig cfg_;
  bool divergence_free_;
  double c_drift_;
  PairList pairs_;
  MonitorState acc_;
  std::vector<DiagnosticsRecord> records_;
  std::vector<MonitorRecord> monitors_;
  std::optional<DiagnosticsRecord> last_;
};

/// max_t u(t) / (n(t) exp(int_a^t f)), trapezoid in time.
double gronwall_compare(const std::vector<double>& t, const std::vector<double>& u, const std::vector<double>& nt,
                        const std::vector<double>& f);

/// Header "pfdiag_v1,t,...,flags"; the first column holds the step index.
void emit_csv(const std::vector<DiagnosticsRecord>& records, const std::string& path);
std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::string& path);
void emit_monitors_csv(const std::vector<MonitorRecord>& records, const std::string& path);
std::vector<MonitorRecord> read_monitors_csv(const std::string& path);

/// Long-format table step,t,quantity,value from a diagnostics CSV.
void write_long_format(const std::vector<DiagnosticsRecord>& records, const std::string& path);

}  // namespace patchflow
