#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/diagnostics.hpp"

namespace patchflow {

struct RunOptions {
  std::string output_dir;  // already resolved by the caller
  bool resume = false;     // continue from the latest snapshot in output_dir
  std::function<void(const std::string&)> log;
};

struct RunReport {
  int exit_code = 0;          // 0 done, 2 orientation lost
  std::string message;
  long steps = 0;
  double t = 0.0;
  std::size_t particles = 0;
  bool resumed = false;
  std::vector<double> tracer_X;        // configured tracers at the end, count * n
  std::vector<double> probe_velocity;  // report.velocity_probes at t = 0
  std::optional<double> density_l1;    // relative L1 mismatch against the reference density
  std::optional<double> roundtrip;     // max_alpha |X^-1(X(alpha, t), t) - alpha|
  std::size_t inverse_flags = 0;       // probes that left the source box
  double support0 = 0.0;
  double support_final = 0.0;
  std::vector<std::string> flags;      // union of the record flags
  std::vector<DiagnosticsRecord> records;
  std::vector<MonitorRecord> monitors;
};

/// Runs a configured simulation, writing diagnostics.csv, monitors.csv,
/// snapshots and summary.json into opt.output_dir. Throws Error on config
/// and I/O problems; a loss of orientation ends the run with exit_code 2
/// after writing the last valid snapshot.
RunReport run_simulation(const RunConfig& cfg, const RunOptions& opt);

KernelSpec make_kernel(const RunConfig& cfg);

/// Cell-centred probe grid: per_axis^n points on [lo, hi].
std::vector<double> probe_grid(const std::vector<double>& lo, const std::vector<double>& hi, int per_axis);

}  // namespace patchflow
