#pragma once

#include "finsler/grid.hpp"
#include "finsler/report.hpp"
#include "finsler/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<int> cells;

  GridDomain domain() const { return GridDomain(lo, hi, cells); }
};

struct MetricSpec {
  std::string family;  // euclidean | randers | minkowski-norm | riemannian | generic
  int dim = 0;
  Mat a;                   // randers quadratic part
  Vec b;                   // randers / minkowski-norm drift
  std::vector<Mat> terms;  // minkowski-norm
  std::string preset;      // riemannian, named chart
  std::vector<std::string> entries;  // riemannian, g(x) row-major
  std::string expression;            // generic
};

struct SetFamilySpec {
  std::optional<GridSpec> chart;  // finer chart for set checks; defaults to the main domain
  std::vector<double> region_lo, region_hi;
  int random = 0;  // random unions
  int max_pieces = 3;
  double min_size = 0.5, max_size = 2.0;
  std::vector<double> ball_radii;                  // forward balls about the origin
  std::optional<double> sharpness_gap_max;         // asserted when set
};

struct PairSpec {
  int pairs = 0;
  std::vector<double> ts{0.25, 0.5, 0.75};
  double min_size = 0.3, max_size = 1.0;
  std::optional<GridSpec> chart;  // chart for the pair checks; defaults to the set chart
};

struct Expectation {
  std::string quantity;
  double min = 0.0, max = 0.0;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  MetricSpec metric;
  std::string density = "lebesgue";  // lebesgue | riemannian-volume | expression in x1..xn
  GridSpec domain;
  Vec origin;

  int uniformity_per_axis = 5;
  int uniformity_directions = 0;
  int legendre_samples = 1000;

  double ricci_tolerance = 1e-6;
  int curvature_per_axis = 5;
  int curvature_directions = 16;
  std::vector<double> Ns{3.0, 10.0};

  double entropy_r_min = 0.0, entropy_r_max = 0.0;
  int entropy_samples = 41;

  std::vector<double> radii;
  EigenOptions eigen;
  double solver_tolerance = 1e-3;

  SetFamilySpec sets;

  int coarea_fields = 0;
  int coarea_levels = 16;
  double tent_radius = 0.0;

  PairSpec brunn_minkowski;
  PairSpec convexity;

  std::vector<Expectation> expect;
};

// ConfigInvalid with the offending field path in the message.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& yaml_text);
void validate(const ScenarioConfig& cfg);

MetricPtr build_metric(const MetricSpec& spec);
MeasureDensity build_measure(const std::string& density, const MetricPtr& metric);

enum Step : unsigned {
  kUniformity = 1u << 0,
  kReversibility = 1u << 1,
  kCurvature = 1u << 2,
  kEntropy = 1u << 3,
  kCheeger = 1u << 4,
  kEigen = 1u << 5,
  kIsoperimetric = 1u << 6,
  kCoarea = 1u << 7,
  kCheegerBuser = 1u << 8,
  kBrunnMinkowski = 1u << 9,
  kConvexity = 1u << 10,
  kAllSteps = (1u << 11) - 1,
};

// Adds the steps the requested ones consume.
unsigned with_dependencies(unsigned steps);

// CLI subcommand name to step set; InvalidArgument when unknown.
unsigned steps_for_command(const std::string& command);

// Runs the requested steps in dependency order. Conclusions that need
// Ric_∞ ≥ 0 become Info records when the certification fails.
std::vector<ReportRecord> run_scenario(const ScenarioConfig& cfg, unsigned steps = kAllSteps);

// Per-sample curvature table (CSV) for the curvature-report command.
std::string curvature_samples_csv(const ScenarioConfig& cfg);

// Random unions of intervals (1-d) or of disks and boxes (2-d, 3-d) inside
// the region, each non-empty and clear of the chart boundary.
std::vector<CandidateSet> random_sets(const GridDomain& g, const std::vector<double>& lo, const std::vector<double>& hi,
                                      int count, int max_pieces, double min_size, double max_size, std::uint64_t seed,
                                      const std::string& prefix);

}  // namespace finsler
