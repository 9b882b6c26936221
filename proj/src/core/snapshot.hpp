#pragma once

#include <string>
#include <vector>

#include "core/diagnostics.hpp"
#include "core/flow_state.hpp"

namespace patchflow {

/// Flow snapshot: the PFLD header (n, count) and blocks X, DX (row-major),
/// detDX, rho0, followed by a "PFST" trailer with t, the step index, h,
/// the tracers and the packed monitor state needed to resume.
struct Snapshot {
  int n = 0;
  std::size_t count = 0;
  double h = 0.0;
  double t = 0.0;
  long step = 0;
  std::vector<double> X, DX, det, rho0;
  std::vector<double> tracer_alpha, tracer_X;
  std::vector<double> monitor;  // MonitorState::pack()
};

void write_snapshot(const std::string& path, const FlowState& s, const MonitorState& monitor);
Snapshot read_snapshot(const std::string& path);

/// Rebuilds a flow state on `geom` from a snapshot; throws Error(config) when
/// the snapshot was taken on a different lattice.
FlowState restore_state(std::shared_ptr<const ParticleGeometry> geom, const Snapshot& snap);

/// snapshot_<step>.pfld inside dir.
std::string snapshot_path(const std::string& dir, long step);
/// Snapshot with the largest step in dir, or "" when there is none.
std::string latest_snapshot(const std::string& dir);

}  // namespace patchflow
