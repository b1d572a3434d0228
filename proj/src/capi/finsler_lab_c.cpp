#include "finsler_lab.h"

#include "finsler/curvature.hpp"
#include "finsler/distance.hpp"
#include "finsler/metric_core.hpp"
#include "finsler/report.hpp"
#include "finsler/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

struct fl_metric {
  finsler::MetricPtr ptr;
};

struct fl_scenario {
  finsler::ScenarioConfig cfg;
};

struct fl_report {
  std::vector<finsler::ReportRecord> records;
};

namespace {

thread_local std::string g_last_error;

fl_status fail(fl_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
fl_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FL_OK;
  } catch (const finsler::Error& e) {
    return fail(static_cast<fl_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FL_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw finsler::Error(finsler::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

finsler::Vec vec(const double* p, int n) {
  need(p, "vector argument");
  finsler::Vec v(n);
  for (int k = 0; k < n; ++k) v[k] = p[k];
  return v;
}

void check_dim(int dim) {
  if (dim < 1 || dim > finsler::kMaxDim)
    throw finsler::Error(finsler::ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fl_metric* wrap(finsler::MetricPtr p) { return new fl_metric{std::move(p)}; }

}  // namespace

extern "C" {

const char* fl_version(void) { return "0.3.0"; }

const char* fl_last_error(void) { return g_last_error.c_str(); }

const char* fl_status_name(fl_status status) {
  if (status == FL_OK) return "Ok";
  if (status == FL_ERR_INTERNAL) return "Internal";
  if (status < FL_ERR_INVALID_ARGUMENT || status > FL_ERR_PARSE_ERROR) return "Unknown";
  return finsler::to_string(static_cast<finsler::ErrorCode>(status)).data();
}

void fl_string_free(char* s) { std::free(s); }

fl_status fl_metric_euclidean(int dim, fl_metric** out) {
  return guard([&] {
    need(out, "out");
    check_dim(dim);
    *out = wrap(finsler::make_euclidean(dim));
  });
}

fl_status fl_metric_randers(int dim, const double* a, const double* b, fl_metric** out) {
  return guard([&] {
    need(out, "out");
    need(a, "a");
    check_dim(dim);
    finsler::Mat A(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) A(i, j) = a[i * dim + j];
    *out = wrap(finsler::make_randers(A, vec(b, dim)));
  });
}

fl_status fl_metric_riemannian_preset(const char* name, int dim, fl_metric** out) {
  return guard([&] {
    need(out, "out");
    need(name, "name");
    check_dim(dim);
    *out = wrap(finsler::make_riemannian_preset(name, dim));
  });
}

fl_status fl_metric_generic(int dim, const char* expression, fl_metric** out) {
  return guard([&] {
    need(out, "out");
    need(expression, "expression");
    check_dim(dim);
    *out = wrap(finsler::make_generic(dim, expression));
  });
}

fl_status fl_metric_reverse(const fl_metric* m, fl_metric** out) {
  return guard([&] {
    need(m, "metric");
    need(out, "out");
    *out = wrap(finsler::reverse_metric(m->ptr));
  });
}

void fl_metric_free(fl_metric* m) { delete m; }

int fl_metric_dim(const fl_metric* m) { return m ? m->ptr->dim() : 0; }

fl_status fl_metric_norm(const fl_metric* m, const double* x, const double* y, double* out) {
  return guard([&] {
    need(m, "metric");
    need(out, "out");
    const int n = m->ptr->dim();
    *out = m->ptr->norm(vec(x, n), vec(y, n));
  });
}

fl_status fl_metric_dual_norm(const fl_metric* m, const double* x, const double* xi, double* out) {
  return guard([&] {
    need(m, "metric");
    need(out, "out");
    const int n = m->ptr->dim();
    *out = finsler::dual_norm(*m->ptr, vec(x, n), vec(xi, n));
  });
}

fl_status fl_metric_legendre(const fl_metric* m, const double* x, const double* y, double* xi_out) {
  return guard([&] {
    need(m, "metric");
    need(xi_out, "out");
    const int n = m->ptr->dim();
    const finsler::Vec xi = finsler::legendre(*m->ptr, vec(x, n), vec(y, n));
    for (int k = 0; k < n; ++k) xi_out[k] = xi[k];
  });
}

fl_status fl_metric_legendre_inverse(const fl_metric* m, const double* x, const double* xi, double* y_out) {
  return guard([&] {
    need(m, "metric");
    need(y_out, "out");
    const int n = m->ptr->dim();
    const finsler::Vec y = finsler::legendre_inverse(*m->ptr, vec(x, n), vec(xi, n));
    for (int k = 0; k < n; ++k) y_out[k] = y[k];
  });
}

fl_status fl_metric_fundamental_tensor(const fl_metric* m, const double* x, const double* y, double* g_out) {
  return guard([&] {
    need(m, "metric");
    need(g_out, "out");
    const int n = m->ptr->dim();
    const finsler::FundamentalTensor t = finsler::fundamental_tensor(*m->ptr, vec(x, n), vec(y, n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g_out[i * n + j] = t.g(i, j);
  });
}

fl_status fl_metric_constants(const fl_metric* m, const double* lo, const double* hi, int per_axis, fl_constants* out) {
  return guard([&] {
    need(m, "metric");
    need(out, "out");
    need(lo, "lo");
    need(hi, "hi");
    const int n = m->ptr->dim();
    if (per_axis < 1) throw finsler::Error(finsler::ErrorCode::InvalidArgument, "per_axis must be >= 1");
    const finsler::GridDomain g(std::vector<double>(lo, lo + n), std::vector<double>(hi, hi + n),
                                std::vector<int>(static_cast<std::size_t>(n), std::max(per_axis, 8)));
    const finsler::UniformityConstants c = finsler::uniformity_constants(*m->ptr, finsler::sample_points(g, per_axis));
    *out = {c.kappa, c.kappa_star, c.lambda_F, c.lambda_infinite ? 1 : 0};
  });
}

fl_status fl_distance_from_point(const fl_metric* m, const double* lo, const double* hi, const int* cells,
                                 const double* x0, int backward, double* out) {
  return guard([&] {
    need(m, "metric");
    need(lo, "lo");
    need(hi, "hi");
    need(cells, "cells");
    need(out, "out");
    const int n = m->ptr->dim();
    const finsler::GridDomain g(std::vector<double>(lo, lo + n), std::vector<double>(hi, hi + n),
                                std::vector<int>(cells, cells + n));
    const finsler::DistanceField f = finsler::distance_from_point(
        m->ptr, g, vec(x0, n), backward ? finsler::Direction::Backward : finsler::Direction::Forward);
    std::copy(f.d.begin(), f.d.end(), out);
  });
}

fl_status fl_scenario_load(const char* path, fl_scenario** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new fl_scenario{finsler::load_scenario(path)};
  });
}

fl_status fl_scenario_parse(const char* yaml, fl_scenario** out) {
  return guard([&] {
    need(yaml, "yaml");
    need(out, "out");
    *out = new fl_scenario{finsler::parse_scenario(yaml)};
  });
}

void fl_scenario_free(fl_scenario* s) { delete s; }

const char* fl_scenario_name(const fl_scenario* s) { return s ? s->cfg.name.c_str() : ""; }

fl_status fl_scenario_set_seed(fl_scenario* s, uint64_t seed) {
  return guard([&] {
    need(s, "scenario");
    s->cfg.seed = seed;
  });
}

fl_status fl_command_steps(const char* command, unsigned* steps) {
  return guard([&] {
    need(command, "command");
    need(steps, "steps");
    *steps = finsler::steps_for_command(command);
  });
}

fl_status fl_scenario_run(const fl_scenario* s, unsigned steps, fl_report** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    *out = new fl_report{finsler::run_scenario(s->cfg, steps)};
  });
}

fl_status fl_scenario_curvature_csv(const fl_scenario* s, char** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    *out = dup(finsler::curvature_samples_csv(s->cfg));
  });
}

void fl_report_free(fl_report* r) { delete r; }

size_t fl_report_size(const fl_report* r) { return r ? r->records.size() : 0; }

fl_status fl_report_record(const fl_report* r, size_t i, fl_record* out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    if (i >= r->records.size()) throw finsler::Error(finsler::ErrorCode::InvalidArgument, "record index out of range");
    const finsler::ReportRecord& rec = r->records[i];
    out->scenario = rec.scenario.c_str();
    out->quantity = rec.quantity.c_str();
    out->value = rec.value;
    out->error_bar = rec.error_bar;
    out->status = rec.status == finsler::Status::Pass   ? FL_RECORD_PASS
                  : rec.status == finsler::Status::Fail ? FL_RECORD_FAIL
                                                        : FL_RECORD_INFO;
    out->provenance = finsler::to_string(rec.provenance).data();
    out->anchor = rec.anchor.c_str();
    out->witness = rec.witness.c_str();
  });
}

int fl_report_all_pass(const fl_report* r) { return r && finsler::all_asserted_pass(r->records) ? 1 : 0; }

fl_status fl_report_serialize(const fl_report* r, fl_format format, char** out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    *out = dup(format == FL_FORMAT_CSV ? finsler::to_csv(r->records) : finsler::to_json(r->records));
  });
}

fl_status fl_report_parse_json(const char* text, fl_report** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new fl_report{finsler::parse_json(text)};
  });
}

fl_status fl_report_write(const fl_report* r, const char* dir, const char* stem, fl_format format, char** path_out) {
  return guard([&] {
    need(r, "report");
    need(dir, "dir");
    need(stem, "stem");
    const auto path = finsler::emit_report(
        r->records, format == FL_FORMAT_CSV ? finsler::ReportFormat::Csv : finsler::ReportFormat::Json, dir, stem);
    if (path_out) *path_out = dup(path.string());
  });
}

}  // extern "C"
