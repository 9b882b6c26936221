#include "core/snapshot.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "core/errors.hpp"
#include "core/pfld.hpp"

namespace patchflow {

void write_snapshot(const std::string& path, const FlowState& s, const MonitorState& monitor) {
  const int n = s.n();
  const std::size_t count = s.count();
  // Write next to the target and rename, so a crash never leaves a torn file.
  const std::string tmp = path + ".tmp";
  {
    BinaryWriter w(tmp);
    w.magic("PFLD");
    w.u32(static_cast<std::uint32_t>(n));
    w.u64(count);
    w.f64s(s.X);
    w.f64s(s.DX);
    w.f64s(s.det);
    w.f64s(s.geom->rho0);
    w.magic("PFST");
    w.f64(s.t);
    w.u64(static_cast<std::uint64_t>(s.step));
    w.f64(s.h());
    w.u64(s.tracers());
    w.f64s(s.tracer_alpha);
    w.f64s(s.tracer_X);
    const std::vector<double> packed = monitor.pack();
    w.u64(packed.size());
    w.f64s(packed);
    w.close();
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot move snapshot into place at " + path + ": " + ec.message());
}

Snapshot read_snapshot(const std::string& path) {
  BinaryReader r(path);
  if (!r.expect_magic("PFLD")) fail(ErrorCode::io, path + ": not a PFLD file");
  Snapshot s;
  s.n = static_cast<int>(r.u32());
  s.count = r.u64();
  if (s.n < 1 || s.n > 16) fail(ErrorCode::io, path + ": bad dimension");
  const std::size_t n = s.n;
  s.X = r.f64s(s.count * n);
  s.DX = r.f64s(s.count * n * n);
  s.det = r.f64s(s.count);
  s.rho0 = r.f64s(s.count);
  if (!r.expect_magic("PFST")) fail(ErrorCode::io, path + ": no resume trailer");
  s.t = r.f64();
  s.step = static_cast<long>(r.u64());
  s.h = r.f64();
  const std::size_t tracers = r.u64();
  s.tracer_alpha = r.f64s(tracers * n);
  s.tracer_X = r.f64s(tracers * n);
  s.monitor = r.f64s(r.u64());
  if (!r.at_end()) fail(ErrorCode::io, path + ": trailing bytes after the snapshot");
  return s;
}

FlowState restore_state(std::shared_ptr<const ParticleGeometry> geom, const Snapshot& snap) {
  if (snap.n != geom->n || snap.count != geom->count() || snap.h != geom->h || snap.rho0 != geom->rho0)
    fail(ErrorCode::config, "snapshot was taken on a different particle lattice");
  FlowState s;
  s.geom = std::move(geom);
  s.t = snap.t;
  s.step = snap.step;
  s.X = snap.X;
  s.DX = snap.DX;
  s.det = snap.det;
  s.tracer_alpha = snap.tracer_alpha;
  s.tracer_X = snap.tracer_X;
  return s;
}

std::string snapshot_path(const std::string& dir, long step) {
  char name[64];
  std::snprintf(name, sizeof name, "snapshot_%08ld.pfld", step);
  return (std::filesystem::path(dir) / name).string();
}

std::string latest_snapshot(const std::string& dir) {
  std::error_code ec;
  std::string best;
  long best_step = -1;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    long step = -1;
    char tail[8] = {0};
    if (std::sscanf(name.c_str(), "snapshot_%8ld.%5s", &step, tail) == 2 && std::string(tail) == "pfld" &&
        step > best_step) {
      best_step = step;
      best = e.path().string();
    }
  }
  return best;
}

}  // namespace patchflow
