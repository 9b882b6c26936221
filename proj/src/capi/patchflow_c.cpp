#include "patchflow/patchflow.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "core/commands.hpp"
#include "core/config.hpp"
#include "core/determinant.hpp"
#include "core/flow.hpp"
#include "core/parallel.hpp"
#include "core/simulation.hpp"
#include "core/sphere.hpp"

using namespace patchflow;

struct pf_kernel {
  KernelSpec k;
};

struct pf_config {
  RunConfig c;
};

struct pf_run {
  std::unique_ptr<Flow> flow;
};

namespace {

thread_local std::string last_error;

pf_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return PF_INVALID_ARGUMENT;
    case ErrorCode::unknown_kernel: return PF_UNKNOWN_KERNEL;
    case ErrorCode::dimension_mismatch: return PF_DIMENSION_MISMATCH;
    case ErrorCode::not_converged: return PF_NOT_CONVERGED;
    case ErrorCode::orientation_lost: return PF_ORIENTATION_LOST;
    case ErrorCode::non_cz_kernel: return PF_NON_CZ_KERNEL;
    case ErrorCode::io: return PF_IO;
    case ErrorCode::config: return PF_CONFIG;
    case ErrorCode::internal: return PF_INTERNAL;
  }
  return PF_INTERNAL;
}

pf_status set_error(pf_status s, const std::string& what) {
  last_error = what;
  return s;
}

template <class F>
pf_status call(F&& fn) {
  try {
    last_error.clear();
    fn();
    return PF_OK;
  } catch (const Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PF_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PF_INTERNAL, e.what());
  }
}

pf_status null_arg(const char* what) { return set_error(PF_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

Sink make_sink(pf_write_fn write, void* user) {
  Sink s;
  if (write) {
    s.out = [write, user](const std::string& t) { write(user, 1, t.c_str()); };
    s.err = [write, user](const std::string& t) { write(user, 2, t.c_str()); };
  }
  return s;
}

CommandOptions command_options(const pf_command_options* o) {
  CommandOptions c;
  if (o->config) c.config = o->config;
  if (o->output) c.output = o->output;
  c.threads = o->threads;
  if (o->has_seed) c.seed = o->seed;
  c.resume = o->resume != 0;
  return c;
}

}  // namespace

extern "C" {

const char* pf_version(void) { return "1.0.0"; }

const char* pf_status_string(pf_status s) {
  switch (s) {
    case PF_OK: return "ok";
    case PF_INVALID_ARGUMENT: return "invalid argument";
    case PF_UNKNOWN_KERNEL: return "unknown kernel";
    case PF_DIMENSION_MISMATCH: return "dimension mismatch";
    case PF_NOT_CONVERGED: return "not converged";
    case PF_ORIENTATION_LOST: return "orientation lost";
    case PF_NON_CZ_KERNEL: return "kernel without zero sphere mean";
    case PF_IO: return "i/o error";
    case PF_CONFIG: return "config error";
    case PF_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pf_last_error(void) { return last_error.c_str(); }

int pf_exit_code(pf_status s) {
  switch (s) {
    case PF_OK: return 0;
    case PF_CONFIG:
    case PF_INVALID_ARGUMENT:
    case PF_DIMENSION_MISMATCH: return 64;
    case PF_UNKNOWN_KERNEL: return 65;
    case PF_IO: return 74;
    case PF_ORIENTATION_LOST: return 2;
    default: return 70;
  }
}

pf_status pf_set_threads(int threads) {
  if (threads < 1) return set_error(PF_INVALID_ARGUMENT, "thread count must be >= 1");
  return call([&] { set_thread_count(threads); });
}

pf_status pf_kernel_builtin(const char* name, int n, const double* params, size_t nparams, pf_kernel** out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  if (nparams > 0 && !params) return null_arg("params");
  *out = nullptr;
  return call([&] {
    std::vector<double> p(params, params + nparams);
    *out = new pf_kernel{builtin_kernel(name, n, p)};
  });
}

void pf_kernel_free(pf_kernel* k) { delete k; }

int pf_kernel_dimension(const pf_kernel* k) { return k ? k->k.dimension() : 0; }

pf_status pf_kernel_evaluate(const pf_kernel* k, const double* x, double* out) {
  if (!k || !x || !out) return null_arg("argument");
  return call([&] { k->k.evaluate(x, out); });
}

pf_status pf_kernel_gradient(const pf_kernel* k, const double* x, double* out) {
  if (!k || !x || !out) return null_arg("argument");
  return call([&] { k->k.gradient(x, out); });
}

pf_status pf_kernel_sphere_constants(const pf_kernel* k, int nodes, double* c, double* zero_mean) {
  if (!k || !c) return null_arg("argument");
  return call([&] {
    const int n = k->k.dimension();
    const SphereIntegrals si = sphere_integrals(k->k, nodes > 0 ? nodes : default_sphere_nodes(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c[i * n + j] = si.c(i, j);
    if (zero_mean) *zero_mean = si.zero_mean_residual.cwiseAbs().maxCoeff();
  });
}

pf_status pf_det_derivative(const double* dx, const double* dy, int n, double* out) {
  if (!dx || !dy || !out) return null_arg("argument");
  if (n < 1) return set_error(PF_INVALID_ARGUMENT, "n must be >= 1");
  return call([&] { *out = det_derivative(dx, dy, n); });
}

pf_status pf_config_load(const char* path, pf_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return call([&] { *out = new pf_config{load_config(resolve_config_path(path))}; });
}

pf_status pf_config_parse(const char* text, const char* base_dir, pf_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return call([&] { *out = new pf_config{parse_config(text, base_dir ? base_dir : ".")}; });
}

void pf_config_free(pf_config* c) { delete c; }

int pf_config_dimension(const pf_config* c) { return c ? c->c.dimension : 0; }

pf_status pf_config_set_seed(pf_config* c, uint64_t seed) {
  if (!c) return null_arg("config");
  c->c.seed = seed;
  return PF_OK;
}

pf_status pf_config_set_output(pf_config* c, const char* dir) {
  if (!c || !dir) return null_arg("argument");
  return call([&] { c->c.output_dir = dir; });
}

pf_status pf_run_create(const pf_config* c, pf_run** out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return call([&] {
    const RunConfig& cfg = c->c;
    const KernelSpec k = make_kernel(cfg);
    const SphereIntegrals si = sphere_integrals(k, cfg.sphere_nodes > 0 ? cfg.sphere_nodes : default_sphere_nodes(cfg.dimension));
    auto geom = build_geometry(cfg.dimension, make_density(cfg.density, cfg.dimension), lattice_options(cfg));
    auto r = std::make_unique<pf_run>();
    r->flow = std::make_unique<Flow>(FlowState::initial(geom, cfg.tracers), make_model(k, si.c, cfg.quad), cfg.time);
    *out = r.release();
  });
}

void pf_run_free(pf_run* r) { delete r; }

pf_status pf_run_step(pf_run* r, int steps) {
  if (!r) return null_arg("run");
  if (steps < 0) return set_error(PF_INVALID_ARGUMENT, "steps must be >= 0");
  return call([&] { r->flow->advance(steps); });
}

double pf_run_time(const pf_run* r) { return r ? r->flow->state().t : 0.0; }

size_t pf_run_particle_count(const pf_run* r) { return r ? r->flow->state().count() : 0; }

pf_status pf_run_positions(const pf_run* r, double* out, size_t capacity) {
  if (!r || !out) return null_arg("argument");
  const auto& X = r->flow->state().X;
  if (capacity < X.size()) return set_error(PF_INVALID_ARGUMENT, "buffer too small");
  std::memcpy(out, X.data(), X.size() * sizeof(double));
  return PF_OK;
}

pf_status pf_run_determinants(const pf_run* r, double* out, size_t capacity) {
  if (!r || !out) return null_arg("argument");
  const auto& d = r->flow->state().det;
  if (capacity < d.size()) return set_error(PF_INVALID_ARGUMENT, "buffer too small");
  std::memcpy(out, d.data(), d.size() * sizeof(double));
  return PF_OK;
}

int pf_cmd_simulate(const pf_command_options* opt) {
  if (!opt || !opt->config) return pf_exit_code(null_arg("options"));
  return cmd_simulate(command_options(opt), make_sink(opt->write, opt->user));
}

int pf_cmd_verify(const pf_command_options* opt) {
  if (!opt || !opt->config) return pf_exit_code(null_arg("options"));
  return cmd_verify(command_options(opt), make_sink(opt->write, opt->user));
}

int pf_cmd_kernel_info(const char* name, int n, const double* params, size_t nparams, const char* output,
                       pf_write_fn write, void* user) {
  if (!name || (nparams > 0 && !params)) return pf_exit_code(null_arg("argument"));
  return cmd_kernel_info(name, n, std::vector<double>(params, params + nparams), output ? output : "",
                         make_sink(write, user));
}

int pf_cmd_report(const char* csv, const char* output, pf_write_fn write, void* user) {
  if (!csv) return pf_exit_code(null_arg("csv"));
  return cmd_report(csv, output ? output : "", make_sink(write, user));
}

}  // extern "C"
