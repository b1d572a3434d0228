#ifndef FINSLER_LAB_H
#define FINSLER_LAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(FL_BUILDING_LIBRARY)
#define FL_API __attribute__((visibility("default")))
#else
#define FL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Error codes; FL_OK is zero, everything else leaves a message behind
   fl_last_error() on the calling thread. */
typedef enum fl_status {
  FL_OK = 0,
  FL_ERR_INVALID_ARGUMENT = 1,
  FL_ERR_ZERO_DIRECTION,
  FL_ERR_NOT_POSITIVE_DEFINITE,
  FL_ERR_NON_CONVERGENCE,
  FL_ERR_NEWTON_DIVERGENCE,
  FL_ERR_DEGENERATE_SAMPLE,
  FL_ERR_LEFT_DOMAIN,
  FL_ERR_NON_POSITIVE_DENSITY,
  FL_ERR_STENCIL_UNSTABLE,
  FL_ERR_INVALID_N,
  FL_ERR_SOURCE_OUTSIDE_DOMAIN,
  FL_ERR_TOUCHES_BOUNDARY,
  FL_ERR_WINDOW_OUTSIDE_DOMAIN,
  FL_ERR_EMPTY_INPUT,
  FL_ERR_NO_CONVERGENCE,
  FL_ERR_EMPTY_INTERIOR,
  FL_ERR_MONOTONICITY_VIOLATION,
  FL_ERR_SUPPORT_TOO_LARGE,
  FL_ERR_INFEASIBLE_MARGINALS,
  FL_ERR_SINGULAR_PART,
  FL_ERR_PATH_NOT_FOUND,
  FL_ERR_CONFIG_INVALID,
  FL_ERR_IO_FAILURE,
  FL_ERR_PARSE_ERROR,
  FL_ERR_INTERNAL = 99
} fl_status;

typedef enum fl_format { FL_FORMAT_CSV = 0, FL_FORMAT_JSON = 1 } fl_format;
typedef enum fl_record_status { FL_RECORD_PASS = 0, FL_RECORD_FAIL = 1, FL_RECORD_INFO = 2 } fl_record_status;

typedef struct fl_metric fl_metric;
typedef struct fl_scenario fl_scenario;
typedef struct fl_report fl_report;

typedef struct fl_constants {
  double kappa;
  double kappa_star;
  double lambda_F;
  int lambda_infinite;
} fl_constants;

/* Strings point into the owning report and live as long as it does. */
typedef struct fl_record {
  const char* scenario;
  const char* quantity;
  double value;
  double error_bar;
  fl_record_status status;
  const char* provenance;
  const char* anchor;
  const char* witness;
} fl_record;

FL_API const char* fl_version(void);
FL_API const char* fl_last_error(void);
FL_API const char* fl_status_name(fl_status status);
FL_API void fl_string_free(char* s);

/* Metrics. Matrices are row-major dim x dim. */
FL_API fl_status fl_metric_euclidean(int dim, fl_metric** out);
FL_API fl_status fl_metric_randers(int dim, const double* a, const double* b, fl_metric** out);
FL_API fl_status fl_metric_riemannian_preset(const char* name, int dim, fl_metric** out);
FL_API fl_status fl_metric_generic(int dim, const char* expression, fl_metric** out);
FL_API fl_status fl_metric_reverse(const fl_metric* m, fl_metric** out);
FL_API void fl_metric_free(fl_metric* m);
FL_API int fl_metric_dim(const fl_metric* m);

FL_API fl_status fl_metric_norm(const fl_metric* m, const double* x, const double* y, double* out);
FL_API fl_status fl_metric_dual_norm(const fl_metric* m, const double* x, const double* xi, double* out);
FL_API fl_status fl_metric_legendre(const fl_metric* m, const double* x, const double* y, double* xi_out);
FL_API fl_status fl_metric_legendre_inverse(const fl_metric* m, const double* x, const double* xi, double* y_out);
FL_API fl_status fl_metric_fundamental_tensor(const fl_metric* m, const double* x, const double* y, double* g_out);
/* Constants sampled on a per_axis^dim grid of the box [lo, hi]. */
FL_API fl_status fl_metric_constants(const fl_metric* m, const double* lo, const double* hi, int per_axis,
                                     fl_constants* out);

/* Forward (backward = 0) or backward distance from x0 on the grid
   [lo, hi] with `cells` per axis; `out` holds one value per cell, axis 0
   fastest, +inf where unreachable. */
FL_API fl_status fl_distance_from_point(const fl_metric* m, const double* lo, const double* hi, const int* cells,
                                        const double* x0, int backward, double* out);

/* Scenarios (YAML configuration). */
FL_API fl_status fl_scenario_load(const char* path, fl_scenario** out);
FL_API fl_status fl_scenario_parse(const char* yaml, fl_scenario** out);
FL_API void fl_scenario_free(fl_scenario* s);
FL_API const char* fl_scenario_name(const fl_scenario* s);
FL_API fl_status fl_scenario_set_seed(fl_scenario* s, uint64_t seed);
/* Step mask for a CLI command name (run, entropy, cheeger, ...). */
FL_API fl_status fl_command_steps(const char* command, unsigned* steps);
FL_API fl_status fl_scenario_run(const fl_scenario* s, unsigned steps, fl_report** out);
FL_API fl_status fl_scenario_curvature_csv(const fl_scenario* s, char** out);

/* Reports. */
FL_API void fl_report_free(fl_report* r);
FL_API size_t fl_report_size(const fl_report* r);
FL_API fl_status fl_report_record(const fl_report* r, size_t i, fl_record* out);
/* 1 when no asserted record failed. */
FL_API int fl_report_all_pass(const fl_report* r);
FL_API fl_status fl_report_serialize(const fl_report* r, fl_format format, char** out);
FL_API fl_status fl_report_parse_json(const char* text, fl_report** out);
/* Writes <dir>/<stem>.csv|.json; the path is returned when path_out is set. */
FL_API fl_status fl_report_write(const fl_report* r, const char* dir, const char* stem, fl_format format,
                                 char** path_out);

#ifdef __cplusplus
}
#endif

#endif
