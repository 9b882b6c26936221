#ifndef PATCHFLOW_PATCHFLOW_H
#define PATCHFLOW_PATCHFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(PATCHFLOW_BUILDING_LIBRARY)
#define PF_API __attribute__((visibility("default")))
#else
#define PF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pf_status {
  PF_OK = 0,
  PF_INVALID_ARGUMENT = 1,
  PF_UNKNOWN_KERNEL = 2,
  PF_DIMENSION_MISMATCH = 3,
  PF_NOT_CONVERGED = 4,
  PF_ORIENTATION_LOST = 5,
  PF_NON_CZ_KERNEL = 6,
  PF_IO = 7,
  PF_CONFIG = 8,
  PF_INTERNAL = 9
} pf_status;

PF_API const char* pf_version(void);
PF_API const char* pf_status_string(pf_status s);
/* Message of the last failed call on this thread ("" if none). */
PF_API const char* pf_last_error(void);
/* Process exit code for a status: 64 config, 65 unknown kernel, 74 I/O, 70 other, 0 ok. */
PF_API int pf_exit_code(pf_status s);

/* Worker threads for the quadrature loops. Results do not depend on it. */
PF_API pf_status pf_set_threads(int threads);

/* ---- kernels ---- */

typedef struct pf_kernel pf_kernel;

/* name: biot_savart | aggregation | mixed2d (params a, b). */
PF_API pf_status pf_kernel_builtin(const char* name, int n, const double* params, size_t nparams, pf_kernel** out);
PF_API void pf_kernel_free(pf_kernel* k);
PF_API int pf_kernel_dimension(const pf_kernel* k);
/* out[n] = k(x). */
PF_API pf_status pf_kernel_evaluate(const pf_kernel* k, const double* x, double* out);
/* out[n*n], out[i*n + j] = d_i k_j(x). */
PF_API pf_status pf_kernel_gradient(const pf_kernel* k, const double* x, double* out);
/* c[n*n] with c[i*n + j] = int k_j(s) s_i; zero_mean gets max |int d_i k_j| (may be NULL). */
PF_API pf_status pf_kernel_sphere_constants(const pf_kernel* k, int nodes, double* c, double* zero_mean);

/* d/de det(DX + e DY) at e = 0; row-major n*n inputs. */
PF_API pf_status pf_det_derivative(const double* dx, const double* dy, int n, double* out);

/* ---- configs and runs ---- */

typedef struct pf_config pf_config;
typedef struct pf_run pf_run;

/* path may also name a bundled scenario. */
PF_API pf_status pf_config_load(const char* path, pf_config** out);
PF_API pf_status pf_config_parse(const char* text, const char* base_dir, pf_config** out);
PF_API void pf_config_free(pf_config* c);
PF_API int pf_config_dimension(const pf_config* c);
PF_API pf_status pf_config_set_seed(pf_config* c, uint64_t seed);
PF_API pf_status pf_config_set_output(pf_config* c, const char* dir);

/* In-memory time stepping of a configured flow (no files are written). */
PF_API pf_status pf_run_create(const pf_config* c, pf_run** out);
PF_API void pf_run_free(pf_run* r);
PF_API pf_status pf_run_step(pf_run* r, int steps);
PF_API double pf_run_time(const pf_run* r);
PF_API size_t pf_run_particle_count(const pf_run* r);
/* Copies count*n positions; capacity is in doubles. */
PF_API pf_status pf_run_positions(const pf_run* r, double* out, size_t capacity);
/* Copies count determinants of DX. */
PF_API pf_status pf_run_determinants(const pf_run* r, double* out, size_t capacity);

/* ---- commands ---- */

/* stream 1: standard output, 2: diagnostics and errors. text has no newline. */
typedef void (*pf_write_fn)(void* user, int stream, const char* text);

typedef struct pf_command_options {
  const char* config; /* path or bundled scenario name */
  const char* output; /* NULL: PATCHFLOW_OUTPUT, then the config */
  int threads;        /* 0 keeps the current setting */
  int has_seed;
  uint64_t seed;
  int resume;
  pf_write_fn write; /* NULL discards output */
  void* user;
} pf_command_options;

/* The command functions return process exit codes. */
PF_API int pf_cmd_simulate(const pf_command_options* opt);
PF_API int pf_cmd_verify(const pf_command_options* opt);
PF_API int pf_cmd_kernel_info(const char* name, int n, const double* params, size_t nparams, const char* output,
                              pf_write_fn write, void* user);
PF_API int pf_cmd_report(const char* csv, const char* output, pf_write_fn write, void* user);

#ifdef __cplusplus
}
#endif

#endif
