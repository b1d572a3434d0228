/* Exercises the C interface from C. Exit status 0 on success. */
#include "finsler_lab.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

static const char* kScenario =
    "name: capi-line\n"
    "seed: 3\n"
    "metric: {family: euclidean, dim: 1}\n"
    "measure: {density: exp(x1)}\n"
    "domain: {lo: [-14], hi: [14], cells: [1400]}\n"
    "origin: [0]\n"
    "curvature: {per_axis: 3, directions: 2, N: [2]}\n"
    "entropy: {window: [4, 12]}\n";

int main(void) {
  double a[4] = {1, 0, 0, 1}, b[2] = {0.5, 0};
  double x[2] = {0, 0}, y[2] = {1, 0}, xi[2], back[2], g[4], v;
  fl_metric *m = NULL, *r = NULL, *bad = NULL;
  fl_constants c;
  double lo[2] = {-1, -1}, hi[2] = {1, 1};

  EXPECT(strcmp(fl_version(), "0.3.0") == 0);
  EXPECT(fl_metric_randers(2, a, b, &m) == FL_OK);
  EXPECT(fl_metric_dim(m) == 2);
  EXPECT(fl_metric_norm(m, x, y, &v) == FL_OK && fabs(v - 1.5) < 1e-12);
  EXPECT(fl_metric_fundamental_tensor(m, x, y, g) == FL_OK);
  EXPECT(fabs(g[0] - 2.25) < 1e-12 && fabs(g[3] - 1.5) < 1e-12 && fabs(g[1]) < 1e-12);
  EXPECT(fl_metric_legendre(m, x, y, xi) == FL_OK);
  EXPECT(fl_metric_legendre_inverse(m, x, xi, back) == FL_OK);
  EXPECT(fabs(back[0] - 1) < 1e-10 && fabs(back[1]) < 1e-10);
  EXPECT(fl_metric_dual_norm(m, x, xi, &v) == FL_OK && fabs(v - 1.5) < 1e-10);
  EXPECT(fl_metric_constants(m, lo, hi, 3, &c) == FL_OK);
  EXPECT(fabs(c.lambda_F - 3.0) < 1e-6 && !c.lambda_infinite);

  EXPECT(fl_metric_reverse(m, &r) == FL_OK);
  EXPECT(fl_metric_norm(r, x, y, &v) == FL_OK && fabs(v - 0.5) < 1e-12);

  /* errors come back as codes with a message */
  b[0] = 2.0;
  EXPECT(fl_metric_randers(2, a, b, &bad) == FL_ERR_INVALID_ARGUMENT);
  EXPECT(bad == NULL);
  EXPECT(strlen(fl_last_error()) > 0);
  y[0] = 0;
  EXPECT(fl_metric_fundamental_tensor(m, x, y, g) == FL_ERR_ZERO_DIRECTION);
  EXPECT(strcmp(fl_status_name(FL_ERR_ZERO_DIRECTION), "ZeroDirection") == 0);
  EXPECT(fl_metric_norm(NULL, x, y, &v) == FL_ERR_INVALID_ARGUMENT);

  {
    double dlo[1] = {-2}, dhi[1] = {2}, x0[1] = {0.005}, field[400];
    int cells[1] = {400};
    fl_metric* r1 = NULL;
    double a1[1] = {1}, b1[1] = {0.5};
    EXPECT(fl_metric_randers(1, a1, b1, &r1) == FL_OK);
    EXPECT(fl_distance_from_point(r1, dlo, dhi, cells, x0, 0, field) == FL_OK);
    EXPECT(fabs(field[300] - 1.5) < 0.03); /* cell centred at 1.005 */
    EXPECT(fabs(field[100] - 0.5) < 0.01); /* cell centred at -0.995 */
    EXPECT(fl_distance_from_point(r1, dlo, dhi, cells, x0, 1, field) == FL_OK);
    EXPECT(fabs(field[300] - 0.5) < 0.01);
    fl_metric_free(r1);
  }

  {
    fl_scenario* s = NULL;
    fl_report *rep = NULL, *parsed = NULL;
    fl_record rec;
    unsigned steps = 0;
    char *json = NULL, *json2 = NULL;
    size_t i;
    int found = 0;

    EXPECT(fl_scenario_parse("name: [", &s) == FL_ERR_CONFIG_INVALID);
    EXPECT(fl_scenario_parse(kScenario, &s) == FL_OK);
    EXPECT(strcmp(fl_scenario_name(s), "capi-line") == 0);
    EXPECT(fl_command_steps("entropy", &steps) == FL_OK);
    EXPECT(fl_command_steps("nope", &steps) == FL_ERR_INVALID_ARGUMENT);
    EXPECT(fl_command_steps("entropy", &steps) == FL_OK);
    EXPECT(fl_scenario_run(s, steps, &rep) == FL_OK);
    EXPECT(fl_report_size(rep) > 0);
    for (i = 0; i < fl_report_size(rep); ++i) {
      EXPECT(fl_report_record(rep, i, &rec) == FL_OK);
      if (strcmp(rec.quantity, "volume entropy") == 0) {
        found = 1;
        EXPECT(fabs(rec.value - 1.0) < 0.1);
      }
    }
    EXPECT(found);
    EXPECT(fl_report_record(rep, fl_report_size(rep), &rec) == FL_ERR_INVALID_ARGUMENT);
    EXPECT(fl_report_all_pass(rep) == 1);
    EXPECT(fl_report_serialize(rep, FL_FORMAT_JSON, &json) == FL_OK);
    EXPECT(fl_report_parse_json(json, &parsed) == FL_OK);
    EXPECT(fl_report_serialize(parsed, FL_FORMAT_JSON, &json2) == FL_OK);
    EXPECT(strcmp(json, json2) == 0);
    fl_report_free(parsed);
    parsed = NULL;
    EXPECT(fl_report_parse_json("{", &parsed) == FL_ERR_PARSE_ERROR);
    EXPECT(parsed == NULL);
    fl_string_free(json);
    fl_string_free(json2);
    fl_report_free(rep);
    fl_scenario_free(s);
  }

  fl_metric_free(m);
  fl_metric_free(r);
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
