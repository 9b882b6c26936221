#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/commands.hpp"
#include "core/config.hpp"
#include "core/parallel.hpp"
#include "core/simulation.hpp"
#include "core/snapshot.hpp"

using namespace patchflow;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({"pfconf_v1": {
  "dimension": 2, "kernel": "biot_savart",
  "grid": {"h": 0.125, "extent": {"lo": [-1, -1], "hi": [1, 1]}},
  "initial_density": {"type": "ball_patch", "center": [0, 0], "radius": 1.0},
  "tracers": [[0.5, 0.0]],
  "time": {"dt": 0.02, "t_end": 0.4},
  "output": {"snapshot_every": 5},
  "seed": 3
}})";

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunReport run_into(const std::string& dir, bool resume = false) {
  RunConfig cfg = parse_config(kSmall);
  RunOptions ro;
  ro.output_dir = dir;
  ro.resume = resume;
  return run_simulation(cfg, ro);
}

}  // namespace

TEST_CASE("config parsing accepts the small scenario") {
  const RunConfig c = parse_config(kSmall);
  CHECK(c.dimension == 2);
  CHECK(c.h == 0.125);
  CHECK(c.tracers.size() == 2);
  CHECK(c.snapshot_every == 5);
  CHECK(c.seed == 3);
  CHECK(c.time.scheme == Scheme::rk4);
}

TEST_CASE("config errors carry the config code") {
  CHECK(code_of("{not json") == ErrorCode::config);
  CHECK(code_of(R"({"other": {}})") == ErrorCode::config);
  std::string s = kSmall;
  CHECK(code_of(std::string(s).replace(s.find("\"dt\": 0.02"), 10, "\"dt\": 0.0")) == ErrorCode::config);
  CHECK(code_of(std::string(s).replace(s.find("\"h\": 0.125"), 10, "\"h\": -1.0")) == ErrorCode::config);
  CHECK(code_of(std::string(s).replace(s.find("\"seed\": 3"), 9, "\"seed\": 3, \"gamma\": 1.5")) == ErrorCode::config);
  const std::string missing = std::string(s).replace(s.find("{\"type\": \"ball_patch\""), 21,
                                                     "{\"type\": \"custom_samples\", \"path\": \"nope.pfld\"");
  CHECK(code_of(missing) == ErrorCode::io);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::config) == 64);
  CHECK(exit_code_for(ErrorCode::unknown_kernel) == 65);
  CHECK(exit_code_for(ErrorCode::io) == 74);
  CHECK(exit_code_for(ErrorCode::internal) == 70);
}

TEST_CASE("output directory precedence") {
  ::setenv("PATCHFLOW_OUTPUT", "from_env", 1);
  CHECK(resolve_output_dir("flag", "cfg") == "flag");
  CHECK(resolve_output_dir("", "cfg") == "from_env");
  ::unsetenv("PATCHFLOW_OUTPUT");
  CHECK(resolve_output_dir("", "cfg") == "cfg");
}

TEST_CASE("bundled scenarios resolve by name") {
  CHECK(fs::is_regular_file(resolve_config_path("rankine")));
  CHECK(fs::is_regular_file(resolve_config_path("agg3d_collapse")));
  CHECK_THROWS_AS(resolve_config_path("not_a_scenario"), Error);
}

TEST_CASE("zero density leaves every diagnostic constant") {
  const RunConfig c = load_config(resolve_config_path("zero_density"));
  RunOptions ro;
  ro.output_dir = "unit_zero";
  const RunReport r = run_simulation(c, ro);
  CHECK(r.exit_code == 0);
  CHECK(r.particles == 0);
  for (const auto& rec : r.records) {
    CHECK(rec.grad_X_sup == r.records[0].grad_X_sup);
    CHECK(rec.grad_v_sup == 0.0);
    CHECK(rec.support == 0.0);
    CHECK(rec.x0_drift == 0.0);
  }
  fs::remove_all("unit_zero");
}

TEST_CASE("resume from a snapshot reaches the uninterrupted state") {
  fs::remove_all("unit_full");
  fs::remove_all("unit_resume");
  run_into("unit_full");
  run_into("unit_resume");
  // Pretend the second run stopped after step 10.
  fs::remove(snapshot_path("unit_resume", 15));
  fs::remove(snapshot_path("unit_resume", 20));
  const RunReport r = run_into("unit_resume", true);
  CHECK(r.resumed);
  const Snapshot a = read_snapshot(snapshot_path("unit_full", 20));
  const Snapshot b = read_snapshot(snapshot_path("unit_resume", 20));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.X.size(); ++i) worst = std::max(worst, std::abs(a.X[i] - b.X[i]));
  for (std::size_t i = 0; i < a.DX.size(); ++i) worst = std::max(worst, std::abs(a.DX[i] - b.DX[i]));
  CHECK(worst <= 1e-12);
  CHECK(slurp("unit_full/diagnostics.csv") == slurp("unit_resume/diagnostics.csv"));
  CHECK(slurp("unit_full/monitors.csv") == slurp("unit_resume/monitors.csv"));
  fs::remove_all("unit_full");
  fs::remove_all("unit_resume");
}

TEST_CASE("diagnostics bytes do not depend on the thread count") {
  std::vector<std::string> csv;
  for (int t : {1, 2, 8}) {
    set_thread_count(t);
    const std::string dir = "unit_threads_" + std::to_string(t);
    run_into(dir);
    csv.push_back(slurp(fs::path(dir) / "diagnostics.csv"));
    fs::remove_all(dir);
  }
  set_thread_count(1);
  CHECK(csv[0] == csv[1]);
  CHECK(csv[0] == csv[2]);
}
