#pragma once

#include "finsler/geometry.hpp"
#include "finsler/grid.hpp"
#include "finsler/metric_core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace finsler {

// Energies use dual blocks: every 2ⁿ block of neighbouring cells contributes
// F*(x_b, D_c u)² at each of its corners c, where D_c u holds the one-sided
// differences along the block edges meeting at c, weighted by σ(x_b)·|cell|/2ⁿ.
// Only blocks lying inside the domain count, i.e. u is taken to vanish
// beyond it. The block form has no checkerboard null space.
double dirichlet_energy(const Chart& chart, const ScalarField& u);
double field_mass(const Chart& chart, const ScalarField& u);
double rayleigh_quotient(const Chart& chart, const ScalarField& u);

struct EigenOptions {
  int max_iterations = 4000;
  // Relative change of λ over 10 iterations (descent) or per iteration
  // (subspace iteration) that counts as converged.
  double tolerance = 1e-8;
  int restarts = 5;
  std::uint64_t seed = 1;
  // Use the nonlinear descent even for quadratic (Riemannian) energies.
  bool force_general = false;
};

struct RayleighReport {
  double lambda = 0.0;
  ScalarField u;
  std::vector<double> trace;
  double energy = 0.0;
  double mass = 0.0;
  bool converged = false;
  std::string path;  // "linear" or "descent"
};

// λ₁(Ω) over grid fields vanishing outside Ω and on the outer cell layer.
RayleighReport first_eigenvalue_domain(const Chart& chart, const BorelMask& omega, const EigenOptions& opts = {});

struct ExhaustionReport {
  std::vector<double> radii;
  std::vector<double> lambdas;
  std::vector<double> ball_mass;       // m(B⁺_R(x0))
  std::vector<double> half_ball_mass;  // m(B⁺_{R/2}(x0))
  std::vector<bool> converged;
  double unit_ball_mass = 0.0;  // m(B⁺_1(x0))
  double limit = 0.0;           // λ_∞ of λ(R) = λ_∞ + a/R²
  double limit_error = 0.0;     // spread against the last-two-radii and cubic-corrected fits
  bool monotone = true;
  double worst_increase = 0.0;  // largest relative increase between consecutive radii
};

// λ₁(B⁺_R(x0)) along the schedule. MonotonicityViolation (when `strict`)
// if λ grows by more than 1e-3 relative between consecutive radii.
ExhaustionReport first_eigenvalue_exhaustion(const Chart& chart, const Vec& x0, const std::vector<double>& radii,
                                             const EigenOptions& opts = {}, bool strict = true);

// (λ_∞, a) least-squares fit of λ = λ_∞ + a/R².
std::pair<double, double> fit_inverse_square(const std::vector<double>& radii, const std::vector<double>& lambdas);

struct CoareaReport {
  double lhs = 0.0;  // ∫₀^∞ m⁺({f ≥ t}) dt
  double rhs = 0.0;  // ∫ F*(−df) dm
  double slack = 0.0;
  double quadrature_error = 0.0;
  double content_error = 0.0;
  int levels = 0;
  int vanished_levels = 0;  // superlevel sets thinner than the grid resolves
  bool pass = false;
};

// f ≥ 0 with support away from the domain boundary.
CoareaReport coarea_check(const Chart& chart, const ScalarField& f, int levels = 16);

// ∫ F*(x, −df) dm with the block-corner differences.
double dual_gradient_integral(const Chart& chart, const ScalarField& f);

struct IntermediateBound {
  double delta = 0.0;
  double R = 0.0;
  double bound = 0.0;
  double lambda_2R = 0.0;
  bool pass = false;
};

struct CheegerBuserInput {
  UniformityConstants constants;
  bool certified = false;   // Ric_∞ ≥ 0 sampled certification
  EntropyEstimate entropy;  // VE, also the certified lower end of SCh
  ExhaustionReport exhaustion;
  std::vector<double> deltas{0.5, 0.9};
  double solver_tolerance = 1e-3;
};

struct CheegerBuserReport {
  double lambda = 0.0;
  double lambda_slack = 0.0;
  bool lower_available = false;
  double lower_lambda_form = 0.0;  // SCh²/(4Λ_F²)
  double lower_kappa_form = 0.0;   // SCh²/(4κ²)
  double lower_slack = 0.0;
  double upper = 0.0;  // (κ²/4)·VE²
  double upper_slack = 0.0;
  double closure = 0.0;  // (upper − lower)/λ when the lower end is available
  bool lower_lambda_pass = true;
  bool lower_kappa_pass = true;
  bool upper_pass = false;
  std::vector<IntermediateBound> intermediate;
  bool all_pass = false;
};

CheegerBuserReport cheeger_buser_check(const CheegerBuserInput& in);

}  // namespace finsler
