/* Exercises the C API from C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "patchflow/patchflow.h"

static int failures = 0;

#define EXPECT(cond)                                             \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                \
    }                                                            \
  } while (0)

static int lines = 0;
static void count_lines(void* user, int stream, const char* text) {
  (void)user;
  (void)text;
  if (stream == 1) ++lines;
}

static const char* small_config =
    "{\"pfconf_v1\": {\"dimension\": 2, \"kernel\": \"aggregation\","
    " \"grid\": {\"h\": 0.25, \"extent\": {\"lo\": [-1, -1], \"hi\": [1, 1]}},"
    " \"initial_density\": {\"type\": \"ball_patch\", \"center\": [0, 0], \"radius\": 1.0},"
    " \"time\": {\"dt\": 0.05, \"t_end\": 0.2}}}";

int main(void) {
  pf_kernel* k = NULL;
  double x[2] = {2.0, 0.0}, v[2], c[4], zm = 1.0;

  EXPECT(strlen(pf_version()) > 0);

  EXPECT(pf_kernel_builtin("biot_savart", 2, NULL, 0, &k) == PF_OK);
  EXPECT(pf_kernel_dimension(k) == 2);
  EXPECT(pf_kernel_evaluate(k, x, v) == PF_OK);
  EXPECT(fabs(v[1] - 1.0 / (4.0 * M_PI)) < 1e-15);
  EXPECT(pf_kernel_sphere_constants(k, 4096, c, &zm) == PF_OK);
  EXPECT(fabs(c[1] - 0.5) < 1e-10 && fabs(c[2] + 0.5) < 1e-10);
  EXPECT(zm < 1e-10);
  pf_kernel_free(k);

  k = NULL;
  EXPECT(pf_kernel_builtin("nope", 2, NULL, 0, &k) == PF_UNKNOWN_KERNEL);
  EXPECT(k == NULL);
  EXPECT(strstr(pf_last_error(), "nope") != NULL);
  EXPECT(pf_exit_code(PF_UNKNOWN_KERNEL) == 65);
  EXPECT(pf_exit_code(PF_CONFIG) == 64);
  EXPECT(pf_exit_code(PF_IO) == 74);
  EXPECT(pf_kernel_evaluate(NULL, x, v) == PF_INVALID_ARGUMENT);

  {
    /* d/de det(I + e Y) = trace(Y) */
    const double I[4] = {1, 0, 0, 1}, Y[4] = {0.5, 7, -3, 2};
    double d = 0.0;
    EXPECT(pf_det_derivative(I, Y, 2, &d) == PF_OK);
    EXPECT(fabs(d - 2.5) < 1e-15);
  }

  {
    pf_config* cfg = NULL;
    pf_run* run = NULL;
    EXPECT(pf_config_parse("{bad", NULL, &cfg) == PF_CONFIG);
    EXPECT(pf_config_parse(small_config, NULL, &cfg) == PF_OK);
    EXPECT(pf_config_dimension(cfg) == 2);
    EXPECT(pf_run_create(cfg, &run) == PF_OK);
    EXPECT(pf_run_step(run, 4) == PF_OK);
    EXPECT(fabs(pf_run_time(run) - 0.2) < 1e-12);
    {
      size_t count = pf_run_particle_count(run);
      double* det = malloc(count * sizeof(double));
      size_t p;
      EXPECT(count > 0);
      EXPECT(pf_run_determinants(run, det, 0) == PF_INVALID_ARGUMENT);
      EXPECT(pf_run_determinants(run, det, count) == PF_OK);
      /* div v = -rho inside the patch, so det = exp(-t). */
      for (p = 0; p < count; ++p) EXPECT(fabs(det[p] - exp(-0.2)) < 1e-3);
      free(det);
    }
    pf_run_free(run);
    pf_config_free(cfg);
  }

  lines = 0;
  EXPECT(pf_cmd_kernel_info("aggregation", 3, NULL, 0, "capi_out", count_lines, NULL) == 0);
  EXPECT(lines > 3);
  EXPECT(pf_cmd_kernel_info("bogus", 3, NULL, 0, "capi_out", NULL, NULL) == 65);
  {
    pf_command_options o;
    memset(&o, 0, sizeof o);
    o.config = "definitely_missing_scenario";
    EXPECT(pf_cmd_simulate(&o) == 74);
  }

  if (failures) {
    fprintf(stderr, "%d failures\n", failures);
    return 1;
  }
  printf("capi ok\n");
  return 0;
}
