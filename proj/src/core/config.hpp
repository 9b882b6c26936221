#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/diagnostics.hpp"
#include "core/flow_state.hpp"
#include "core/lattice.hpp"
#include "core/singular_integrals.hpp"

namespace patchflow {

struct DensitySpec {
  std::string type = "ball_patch";  // ball_patch | annulus | custom_samples | zero
  std::vector<double> center;
  double radius = 1.0;
  double r_inner = 0.0, r_outer = 1.0;
  double value = 1.0;
  std::string path;  // custom_samples, resolved against the config directory
};

/// Optional post-run report: transported density on a probe grid against a
/// reference patch, and velocity probes at t = 0.
struct ReportSpec {
  bool density = false;
  std::vector<double> probe_lo, probe_hi;
  int probes_per_axis = 128;
  std::optional<DensitySpec> reference;
  std::vector<double> velocity_probes;  // count * n
  bool roundtrip = false;  // max |X^-1(X(alpha)) - alpha| over the particles
};

struct RunConfig {
  int dimension = 2;
  std::string kernel = "biot_savart";
  std::vector<double> kernel_params;
  double gamma = 0.5;

  double h = 0.05;
  std::vector<double> extent_lo, extent_hi;  // lattice extent; defaults to the density box
  LatticeLayout layout = LatticeLayout::cell_centered;

  DensitySpec density;
  std::vector<double> tracers;  // count * n

  TimeIntegratorConfig time;
  double t_end = 1.0;

  QuadratureConfig quad;
  int sphere_nodes = 0;  // 0: default for the dimension

  int every_n_steps = 1;
  double slack = 1.01;
  std::size_t pair_budget = 200000;

  std::string output_dir = "patchflow_out";
  int snapshot_every = 0;  // 0: final snapshot only

  std::uint64_t seed = 0;
  ReportSpec report;

  std::string source_path;  // file the config was read from
};

/// Parses a pfconf_v1 document. Throws Error(config) on schema errors and
/// Error(io) when a referenced file is missing.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

InitialDensity make_density(const DensitySpec& d, int n);
LatticeOptions lattice_options(const RunConfig& c);
DiagnosticsConfig diagnostics_config(const RunConfig& c);

Scheme parse_scheme(const std::string& s);
JacobianMode parse_jacobian_mode(const std::string& s);

}  // namespace patchflow
