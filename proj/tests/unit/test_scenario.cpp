#include "finsler/scenario.hpp"

#include <doctest.h>

#include <string>

using namespace finsler;

namespace {

const char* kSmallLine = R"(
name: small-line
seed: 7
metric: {family: euclidean, dim: 1}
measure: {density: exp(x1)}
domain: {lo: [-14], hi: [14], cells: [1400]}
origin: [0]
curvature: {per_axis: 5, directions: 2, N: [2]}
entropy: {window: [4, 12]}
sets:
  region: {lo: [-4], hi: [4]}
  random: 6
  min_size: 0.5
  max_size: 2.0
  ball_radii: [1, 2, 3]
coarea: {fields: 3, levels: 16, tent_radius: 2}
brunn_minkowski: {pairs: 2, min_size: 0.3, max_size: 1.0}
convexity: {pairs: 2, min_size: 0.3, max_size: 1.0}
expect:
  volume entropy: [0.9, 1.1]
)";

std::string with_line(const std::string& base, const std::string& from, const std::string& to) {
  std::string s = base;
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string config_error(const std::string& yaml) {
  try {
    auto cfg = parse_scenario(yaml);
    validate(cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
    return e.what();
  }
  return "";
}

const ReportRecord* find(const std::vector<ReportRecord>& recs, const std::string& quantity) {
  for (const auto& r : recs)
    if (r.quantity == quantity) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("bundled scenarios parse and validate") {
  for (const char* name : {"exp-line", "euclid-2d", "hyperbolic-2d", "randers-2d"}) {
    auto cfg = load_scenario(std::string(FINSLER_SCENARIO_DIR) + "/" + name + ".yaml");
    CHECK(cfg.name == name);
    CHECK_NOTHROW(validate(cfg));
  }
}

TEST_CASE("invalid configurations name the offending field") {
  CHECK(config_error(with_line(kSmallLine, "seed: 7", "seed: 7\nbogus: 1")).find("bogus: unknown field") !=
        std::string::npos);
  CHECK(config_error(with_line(kSmallLine, "window: [4, 12]", "window: [12, 4]")).find("entropy.window") !=
        std::string::npos);
  CHECK(config_error(with_line(kSmallLine, "cells: [1400]", "cells: [two]")).find("domain.cells") !=
        std::string::npos);
  CHECK(config_error(with_line(kSmallLine, "family: euclidean", "family: spline")).find("metric.family") !=
        std::string::npos);
  CHECK(config_error(with_line(kSmallLine, "origin: [0]", "origin: [40]")).find("origin") != std::string::npos);
  CHECK(config_error(with_line(kSmallLine, "volume entropy: [0.9, 1.1]", "volume entropy: [1.1, 0.9]"))
            .find("expect.volume entropy") != std::string::npos);
  CHECK(config_error("name: x\n").find("metric: missing") != std::string::npos);
  CHECK(config_error("[1, 2").find("ConfigInvalid") != std::string::npos);
}

TEST_CASE("commands map to step sets with their dependencies") {
  CHECK(steps_for_command("run") == kAllSteps);
  unsigned iso = with_dependencies(steps_for_command("verify-iso"));
  CHECK((iso & kIsoperimetric) != 0);
  CHECK((iso & kEntropy) != 0);
  CHECK((iso & kCurvature) != 0);
  CHECK((with_dependencies(kCheegerBuser) & kEigen) != 0);
  try {
    steps_for_command("launch");
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("small weighted line: full run passes and is deterministic") {
  auto cfg = parse_scenario(kSmallLine);
  auto recs = run_scenario(cfg);
  for (const auto& r : recs) {
    INFO(r.quantity << " = " << r.value << " " << r.witness);
    CHECK(r.status != Status::Fail);
  }
  REQUIRE(find(recs, "volume entropy"));
  CHECK(find(recs, "volume entropy")->value == doctest::Approx(1.0).epsilon(0.1));
  REQUIRE(find(recs, "expected volume entropy"));
  CHECK(find(recs, "isoperimetric margin")->status == Status::Pass);
  CHECK(to_json(run_scenario(cfg)) == to_json(recs));
}

TEST_CASE("expectations outside their range fail") {
  auto cfg = parse_scenario(with_line(kSmallLine, "volume entropy: [0.9, 1.1]", "volume entropy: [2, 3]"));
  auto recs = run_scenario(cfg, kEntropy);
  REQUIRE(find(recs, "expected volume entropy"));
  CHECK(find(recs, "expected volume entropy")->status == Status::Fail);
  CHECK_FALSE(find(recs, "expected volume entropy")->witness.empty());
}

TEST_CASE("uncertified curvature turns curvature-gated conclusions into info records") {
  // σ = exp(x³/300) has Ric_∞ = −x/50 < 0 for x > 0
  auto cfg = parse_scenario(with_line(kSmallLine, "density: exp(x1)", "density: exp(x1^3/300)"));
  auto recs = run_scenario(cfg, kIsoperimetric);
  REQUIRE(find(recs, "min Ric_inf"));
  REQUIRE(find(recs, "isoperimetric margin"));
  CHECK(find(recs, "isoperimetric margin")->status == Status::Info);
}

TEST_CASE("curvature sample table has one row per sample") {
  auto cfg = parse_scenario(kSmallLine);
  std::string csv = curvature_samples_csv(cfg);
  auto lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 1 + 5 * 2);
}
