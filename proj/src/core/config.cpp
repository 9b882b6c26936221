#include "core/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/pfld.hpp"

namespace patchflow {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::config, what); }

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  const json* v = find(j, key);
  if (!v) bad(where + ": missing key '" + key + "'");
  try {
    return v->get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + ": wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!find(j, key)) return fallback;
  return get<T>(j, key, where);
}

std::vector<double> vec(const json& j, const char* key, std::size_t n, const std::string& where) {
  auto v = get<std::vector<double>>(j, key, where);
  if (v.size() != n) bad(where + "." + key + ": expected " + std::to_string(n) + " numbers");
  return v;
}

std::vector<double> points(const json& j, const char* key, int n, const std::string& where) {
  std::vector<double> out;
  const json* v = find(j, key);
  if (!v) return out;
  if (!v->is_array()) bad(where + "." + key + ": expected a list of points");
  for (const json& p : *v) {
    std::vector<double> x;
    try {
      x = p.get<std::vector<double>>();
    } catch (const json::exception&) {
      bad(where + "." + key + ": points must be number lists");
    }
    if (x.size() != static_cast<std::size_t>(n)) bad(where + "." + key + ": point of the wrong dimension");
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

DensitySpec parse_density(const json& j, int n, const std::string& base, const std::string& where) {
  if (!j.is_object()) bad(where + ": expected an object");
  DensitySpec d;
  d.type = get<std::string>(j, "type", where);
  d.value = get_or<double>(j, "value", 1.0, where);
  if (d.type == "ball_patch") {
    d.center = vec(j, "center", n, where);
    d.radius = get<double>(j, "radius", where);
    if (!(d.radius > 0.0)) bad(where + ".radius must be positive");
  } else if (d.type == "annulus") {
    d.center = vec(j, "center", n, where);
    d.r_inner = get<double>(j, "r_inner", where);
    d.r_outer = get<double>(j, "r_outer", where);
    if (!(d.r_inner >= 0.0 && d.r_outer > d.r_inner)) bad(where + ": annulus radii must satisfy 0 <= r_inner < r_outer");
  } else if (d.type == "custom_samples") {
    const auto p = std::filesystem::path(get<std::string>(j, "path", where));
    d.path = (p.is_absolute() ? p : std::filesystem::path(base) / p).string();
    if (!std::filesystem::exists(d.path)) fail(ErrorCode::io, where + ".path: no such file " + d.path);
  } else if (d.type == "zero") {
  } else {
    bad(where + ".type: unknown density '" + d.type + "'");
  }
  return d;
}

Summation parse_summation(const std::string& s) {
  if (s == "pairwise_tree") return Summation::pairwise_tree;
  if (s == "sequential") return Summation::sequential;
  bad("quadrature.summation: unknown mode '" + s + "'");
}

}  // namespace

Scheme parse_scheme(const std::string& s) {
  if (s == "rk4") return Scheme::rk4;
  if (s == "euler") return Scheme::euler;
  if (s == "picard") return Scheme::picard;
  bad("time.scheme: unknown scheme '" + s + "'");
}

JacobianMode parse_jacobian_mode(const std::string& s) {
  if (s == "variational") return JacobianMode::variational;
  if (s == "finite_difference") return JacobianMode::finite_difference;
  bad("time.jacobian_mode: unknown mode '" + s + "'");
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("pfconf_v1")) bad("config must have the top-level key 'pfconf_v1'");
  const json& j = doc["pfconf_v1"];
  if (!j.is_object()) bad("pfconf_v1 must be an object");

  RunConfig c;
  c.dimension = get<int>(j, "dimension", "pfconf_v1");
  if (c.dimension < 2 || c.dimension > 16) bad("dimension must lie in [2, 16]");
  const int n = c.dimension;

  const json* kp = find(j, "kernel");
  if (!kp) bad("pfconf_v1: missing key 'kernel'");
  const json& k = *kp;
  if (k.is_string()) {
    c.kernel = k.get<std::string>();
  } else {
    c.kernel = get<std::string>(k, "name", "kernel");
    c.kernel_params = get_or<std::vector<double>>(k, "params", {}, "kernel");
  }
  c.gamma = get_or<double>(j, "gamma", 0.5, "pfconf_v1");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) bad("gamma must lie in (0, 1)");

  const json* grid = find(j, "grid");
  if (!grid) bad("pfconf_v1: missing key 'grid'");
  c.h = get<double>(*grid, "h", "grid");
  if (!(c.h > 0.0)) bad("grid.h must be positive");
  if (const json* ext = find(*grid, "extent")) {
    c.extent_lo = vec(*ext, "lo", n, "grid.extent");
    c.extent_hi = vec(*ext, "hi", n, "grid.extent");
    for (int d = 0; d < n; ++d)
      if (!(c.extent_hi[d] > c.extent_lo[d])) bad("grid.extent: hi must exceed lo");
  }
  const std::string layout = get_or<std::string>(*grid, "layout", "cell_centered", "grid");
  if (layout == "cell_centered") c.layout = LatticeLayout::cell_centered;
  else if (layout == "vertex") c.layout = LatticeLayout::vertex;
  else bad("grid.layout: unknown layout '" + layout + "'");

  const json* dens = find(j, "initial_density");
  if (!dens) bad("pfconf_v1: missing key 'initial_density'");
  c.density = parse_density(*dens, n, base_dir, "initial_density");
  c.tracers = points(j, "tracers", n, "pfconf_v1");

  const json* time = find(j, "time");
  if (!time) bad("pfconf_v1: missing key 'time'");
  c.time.dt = get<double>(*time, "dt", "time");
  if (!(c.time.dt != 0.0) || !std::isfinite(c.time.dt)) bad("time.dt must be finite and nonzero");
  c.t_end = get<double>(*time, "t_end", "time");
  if (c.t_end / c.time.dt < 0.0) bad("time.t_end must lie in the direction of dt");
  c.time.scheme = parse_scheme(get_or<std::string>(*time, "scheme", "rk4", "time"));
  c.time.jacobian_mode = parse_jacobian_mode(get_or<std::string>(*time, "jacobian_mode", "variational", "time"));
  c.time.picard_iterations = get_or<int>(*time, "picard_iterations", 8, "time");
  c.time.picard_nodes = get_or<int>(*time, "picard_nodes", 5, "time");
  if (c.time.scheme == Scheme::picard && c.time.picard_iterations < 1) bad("time.picard_iterations must be >= 1");

  if (const json* q = find(j, "quadrature")) {
    c.quad.pv_exclusion_cells = get_or<int>(*q, "pv_exclusion_cells", 1, "quadrature");
    c.quad.near_field_refinement = get_or<int>(*q, "near_field_refinement", 4, "quadrature");
    c.quad.summation = parse_summation(get_or<std::string>(*q, "summation", "pairwise_tree", "quadrature"));
    c.sphere_nodes = get_or<int>(*q, "sphere_nodes", 0, "quadrature");
    if (c.quad.pv_exclusion_cells < 0) bad("quadrature.pv_exclusion_cells must be >= 0");
    if (c.quad.near_field_refinement < 1) bad("quadrature.near_field_refinement must be >= 1");
    if (c.sphere_nodes != 0 && c.sphere_nodes < 64) bad("quadrature.sphere_nodes must be >= 64");
  }

  if (const json* d = find(j, "diagnostics")) {
    c.every_n_steps = get_or<int>(*d, "every_n_steps", 1, "diagnostics");
    c.slack = get_or<double>(*d, "slack", 1.01, "diagnostics");
    c.pair_budget = get_or<std::size_t>(*d, "pair_budget", 200000, "diagnostics");
    if (c.every_n_steps < 1) bad("diagnostics.every_n_steps must be >= 1");
    if (!(c.slack >= 1.0)) bad("diagnostics.slack must be >= 1");
  }

  if (const json* o = find(j, "output")) {
    c.output_dir = get_or<std::string>(*o, "dir", c.output_dir, "output");
    c.snapshot_every = get_or<int>(*o, "snapshot_every", 0, "output");
    if (c.snapshot_every < 0) bad("output.snapshot_every must be >= 0");
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0, "pfconf_v1");

  if (const json* r = find(j, "report")) {
    if (const json* p = find(*r, "density_probes")) {
      c.report.density = true;
      c.report.probe_lo = vec(*p, "lo", n, "report.density_probes");
      c.report.probe_hi = vec(*p, "hi", n, "report.density_probes");
      c.report.probes_per_axis = get_or<int>(*p, "per_axis", 128, "report.density_probes");
      if (c.report.probes_per_axis < 2) bad("report.density_probes.per_axis must be >= 2");
    }
    if (const json* ref = find(*r, "reference_density"))
      c.report.reference = parse_density(*ref, n, base_dir, "report.reference_density");
    c.report.velocity_probes = points(*r, "velocity_probes", n, "report");
    c.report.roundtrip = get_or<bool>(*r, "roundtrip", false, "report");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path();
  RunConfig c = parse_config(ss.str(), base.empty() ? "." : base.string());
  c.source_path = path;
  return c;
}

InitialDensity make_density(const DensitySpec& d, int n) {
  if (d.type == "ball_patch") return ball_patch(d.center, d.radius, d.value);
  if (d.type == "annulus") return annulus_patch(d.center, d.r_inner, d.r_outer, d.value);
  if (d.type == "zero") return zero_density();
  if (d.type == "custom_samples") {
    auto f = std::make_shared<ScalarField>(read_field(d.path));
    if (f->n != n) fail(ErrorCode::dimension_mismatch, d.path + ": sample dimension differs from the config");
    InitialDensity rho;
    rho.samples = f;
    return rho;
  }
  fail(ErrorCode::config, "unknown density type " + d.type);
}

LatticeOptions lattice_options(const RunConfig& c) {
  const int n = c.dimension;
  LatticeOptions o;
  o.h = c.h;
  o.layout = c.layout;
  o.refine = c.quad.near_field_refinement;
  if (!c.extent_lo.empty()) {
    o.lo = c.extent_lo;
    o.hi = c.extent_hi;
  } else {
    const DensitySpec& d = c.density;
    const double r = d.type == "annulus" ? d.r_outer : d.radius;
    if (d.type == "ball_patch" || d.type == "annulus") {
      for (int i = 0; i < n; ++i) {
        o.lo.push_back(d.center[i] - r);
        o.hi.push_back(d.center[i] + r);
      }
    } else {
      o.lo.assign(n, -1.0);
      o.hi.assign(n, 1.0);
    }
  }
  return o;
}

DiagnosticsConfig diagnostics_config(const RunConfig& c) {
  DiagnosticsConfig d;
  d.gamma = c.gamma;
  d.slack = c.slack;
  d.pair_budget = c.pair_budget;
  d.seed = c.seed;
  return d;
}

}  // namespace patchflow
