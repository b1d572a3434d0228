#include "finsler_lab.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <string>

namespace {

int report_error(fl_status s) {
  std::fprintf(stderr, "finsler-lab: %s: %s\n", fl_status_name(s), fl_last_error());
  return 2;
}

const char* label(fl_record_status s) {
  switch (s) {
    case FL_RECORD_PASS: return "PASS";
    case FL_RECORD_FAIL: return "FAIL";
    default: return "info";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finsler-lab: numerical checks on Finsler metric measure manifolds"};
  app.require_subcommand(1);
  std::string config, out_dir = ".", format = "json";
  long long seed = -1;
  bool quiet = false;
  const char* commands[][2] = {
      {"run", "every check of the scenario"},
      {"entropy", "volume entropy of forward balls"},
      {"cheeger", "second Cheeger constant bracket"},
      {"eigen", "first eigenvalue along the ball exhaustion"},
      {"verify-iso", "isoperimetric inequality on the candidate sets"},
      {"verify-cb", "Cheeger-Buser sandwich"},
      {"cd-check", "entropy convexity along displacement interpolation"},
      {"bm-check", "Brunn-Minkowski inequality"},
      {"coarea", "co-area inequality"},
      {"curvature-report", "curvature samples and certification"},
      {"metric", "uniformity constants, reversibility and Legendre identities"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("config", config, "scenario YAML")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "override the scenario seed")->check(CLI::NonNegativeNumber);
    sub->add_flag("-q,--quiet", quiet, "only print the summary line");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  fl_scenario* scenario = nullptr;
  if (fl_status s = fl_scenario_load(config.c_str(), &scenario)) return report_error(s);
  if (seed >= 0) fl_scenario_set_seed(scenario, static_cast<uint64_t>(seed));
  unsigned steps = 0;
  fl_command_steps(command.c_str(), &steps);

  fl_report* report = nullptr;
  if (fl_status s = fl_scenario_run(scenario, steps, &report)) {
    fl_scenario_free(scenario);
    return report_error(s);
  }
  const std::string stem = std::string(fl_scenario_name(scenario)) + "-" + command;
  char* path = nullptr;
  const fl_format fmt = format == "csv" ? FL_FORMAT_CSV : FL_FORMAT_JSON;
  if (fl_status s = fl_report_write(report, out_dir.c_str(), stem.c_str(), fmt, &path)) {
    fl_report_free(report);
    fl_scenario_free(scenario);
    return report_error(s);
  }

  if (command == "curvature-report") {
    char* csv = nullptr;
    if (fl_status s = fl_scenario_curvature_csv(scenario, &csv)) return report_error(s);
    const std::string samples = out_dir + "/" + fl_scenario_name(scenario) + "-curvature-samples.csv";
    std::ofstream(samples) << csv;
    fl_string_free(csv);
    if (!quiet) std::printf("samples: %s\n", samples.c_str());
  }

  int failed = 0;
  const size_t n = fl_report_size(report);
  for (size_t i = 0; i < n; ++i) {
    fl_record r;
    fl_report_record(report, i, &r);
    if (r.status == FL_RECORD_FAIL) ++failed;
    if (!quiet || r.status == FL_RECORD_FAIL)
      std::printf("%-4s %-44s %14.8g +- %-10.3g %s\n", label(r.status), r.quantity, r.value, r.error_bar,
                  r.status == FL_RECORD_INFO ? "" : r.witness);
  }
  std::printf("%s: %zu records, %d failed -> %s\n", fl_scenario_name(scenario), n, failed, path);
  const int code = fl_report_all_pass(report) ? 0 : 1;
  fl_string_free(path);
  fl_report_free(report);
  fl_scenario_free(scenario);
  return code;
}
