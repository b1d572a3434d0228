#pragma once

#include "finsler/grid.hpp"

#include <vector>

namespace finsler {

// Atoms at cell centres; weights sum to one.
struct DiscreteMeasure {
  std::vector<Index> cells;
  std::vector<double> weights;

  static DiscreteMeasure uniform_on(const BorelMask& mask, const std::vector<double>& cell_mass);
  static DiscreteMeasure dirac(Index cell);
  void validate() const;
};

struct TransportPlan {
  DiscreteMeasure mu0, mu1;
  // Row-major |μ₀| × |μ₁| coupling.
  std::vector<double> pi;

  double at(std::size_t i, std::size_t j) const { return pi[i * mu1.cells.size() + j]; }
  // Largest deviation of row and column sums from the marginals.
  double marginal_error() const;
};

struct WassersteinResult {
  double distance = 0.0;
  double cost = 0.0;  // Σ π_ij d(x_i, z_j)^p
  TransportPlan plan;
};

inline constexpr std::size_t kMaxSupport = 400;

// Exact Monge-Kantorovich problem with cost d(x, z)^p from forward distance
// fields, by successive shortest paths. SupportTooLarge above 400 atoms;
// InfeasibleMarginals if weights are negative or do not sum to one.
WassersteinResult wasserstein_p(const Chart& chart, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, int p);

// Σ ρ log ρ · m with ρ = weight / cell mass.
double relative_entropy(const DiscreteMeasure& mu, const std::vector<double>& cell_mass);

struct Interpolant {
  double t = 0.0;
  DiscreteMeasure cloud;    // atoms spread to neighbouring cells (cloud-in-cell)
  DiscreteMeasure nearest;  // atoms snapped to the nearest cell centre
};

// Each coupled pair moves to parameter t along the grid geodesic traced from
// the predecessor chain, measured in arc length.
std::vector<Interpolant> displacement_interpolation(const Chart& chart, const TransportPlan& plan,
                                                    const std::vector<double>& ts);

struct ConvexityRow {
  double t = 0.0;
  double entropy = 0.0;      // Ent(μ_t), nearest-cell binning
  double chord = 0.0;        // (1−t)Ent(μ₀) + t·Ent(μ₁)
  double slack = 0.0;        // entropy drop from cloud-in-cell spreading
  bool pass = false;
};

struct ConvexityReport {
  bool certified = false;
  double w2 = 0.0;
  std::vector<ConvexityRow> rows;
  bool all_pass = true;
};

ConvexityReport cd_convexity_check(const Chart& chart, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                   const std::vector<double>& ts, bool certified);

}  // namespace finsler
