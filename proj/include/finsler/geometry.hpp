#pragma once

#include "finsler/distance.hpp"
#include "finsler/grid.hpp"

#include <array>
#include <string>
#include <vector>

namespace finsler {

// Fraction of cell i lying in {d < eps}, with d modelled as linear across
// the cell (gradient from finite neighbouring labels). Labels of -inf count
// fully.
double cell_fraction_below(const DistanceField& f, Index i, double eps);
double mass_below(const DistanceField& f, const std::vector<double>& cell_mass, double eps);

// Cells whose centre satisfies d < R.
BorelMask forward_ball(const DistanceField& f, double radius);
BorelMask forward_neighborhood(const Chart& chart, const BorelMask& set, double eps);

struct ContentEstimate {
  double value = 0.0;
  double error_bar = 0.0;
  double mass = 0.0;
  std::array<double, 4> eps{};
  std::array<double, 4> delta{};
};

// m⁺(E) from Δ(ε) = (m(B⁺(E,ε)) − m(E))/ε, with E the smoothed level set of
// the mask (see distance_from_mask) and m(E) its fractional mass. The value
// is Δ(h); Δ at 2h, 4h, 8h are kept for inspection and |Δ(2h) − Δ(h)| is
// the error bar.
ContentEstimate minkowski_content(const Chart& chart, const BorelMask& set);

struct EntropyEstimate {
  double value = 0.0;
  double error_bar = 0.0;  // slope drift between window halves
  double residual = 0.0;   // rms of the linear fit
  double slope_first_half = 0.0;
  double slope_second_half = 0.0;
  std::vector<double> radii;
  std::vector<double> log_mass;
};

EntropyEstimate volume_entropy(const Chart& chart, const Vec& x0, double r_min, double r_max, int samples = 41);

struct CandidateSet {
  std::string label;
  BorelMask mask;
};

struct CheegerBracket {
  double lower = 0.0;
  double upper = 0.0;
  double upper_error = 0.0;
  bool lower_certified = false;
  std::string witness;
};

// Upper end: min of m⁺(E)/m(E) over the candidates; lower end: the
// certified volume entropy (pass 0 when Ric_∞ ≥ 0 is not certified).
CheegerBracket second_cheeger_bracket(const Chart& chart, const std::vector<CandidateSet>& candidates,
                                      double certified_lower, bool certified);

struct MidpointSet {
  BorelMask mask;
  double tolerance = 0.0;  // declared over-approximation (chart units)
  int samples = 0;
};

// t-intermediate points of grid geodesics from sampled points of A to every
// cell of B, dilated by one cell.
MidpointSet midpoint_set(const Chart& chart, const BorelMask& a, const BorelMask& b, double t, int max_samples = 48);

struct BrunnMinkowskiRow {
  double t = 0.0;
  double log_mass_z = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<BrunnMinkowskiRow> brunn_minkowski_check(const Chart& chart, const BorelMask& a, const BorelMask& b,
                                                     const std::vector<double>& ts);

struct IsoperimetricRow {
  std::string label;
  double content = 0.0;
  double content_error = 0.0;
  double mass = 0.0;
  double ratio = 0.0;
  double slack = 0.0;
  bool pass = false;
};

struct IsoperimetricReport {
  double ve = 0.0;
  double ve_error = 0.0;
  bool hypothesis_certified = false;
  std::vector<IsoperimetricRow> rows;
  double sharpness_ratio = 0.0;  // inf of m⁺/m over the ball family
  double sharpness_gap = 0.0;
  std::string sharpness_witness;
  bool all_pass = true;
};

IsoperimetricReport isoperimetric_check(const Chart& chart, const EntropyEstimate& ve, bool certified,
                                        const std::vector<CandidateSet>& sets,
                                        const std::vector<CandidateSet>& ball_family);

// Max of d(x1, x2) over sampled pairs of E (sources on the boundary of E).
double diameter(const Chart& chart, const BorelMask& set, int max_sources = 64);

// Cells of E with at least one face neighbour outside E.
std::vector<Index> boundary_cells(const BorelMask& set);

}  // namespace finsler
