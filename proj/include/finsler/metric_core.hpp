#pragma once

#include "finsler/metric.hpp"

#include <vector>

namespace finsler {

inline constexpr double kZeroDirection = 1e-12;

struct FundamentalTensor {
  Vec x, y;
  Mat g;
  Mat g_inv;
};

// g_ij = ½ ∂²F²/∂yⁱ∂yʲ, closed form for quadratic-plus-linear norms.
FundamentalTensor fundamental_tensor(const MetricModel& m, const Vec& x, const Vec& y);

// ξ ↦ ½∇F² ; L(0) = 0.
Vec legendre(const MetricModel& m, const Vec& x, const Vec& y);

// Inverse Legendre map. Closed form where the family allows it, otherwise
// damped Newton on y ↦ ξ(y) − ½F²(y) started from the best direction of a
// sphere grid scaled to the dual norm.
Vec legendre_inverse(const MetricModel& m, const Vec& x, const Vec& xi);

// F*(ξ) = sup ξ(y)/F(y); F*(0) = 0.
double dual_norm(const MetricModel& m, const Vec& x, const Vec& xi);

// g*^{ij}(x, ξ) = inverse of g(x, L⁻¹ξ).
Mat dual_fundamental_tensor(const MetricModel& m, const Vec& x, const Vec& xi);

// Closed-form dual of a quadratic-plus-linear norm (same shape).
QuadLinear dual_quadratic_linear(const QuadLinear& q);

// Unit-Euclidean directions covering the sphere: ±1 in 1-d, `count` angles in
// 2-d, a Fibonacci lattice in 3-d.
std::vector<Vec> direction_grid(int dim, int count);

struct Witness {
  Vec x, v, w;
};

struct ReversibilityResult {
  double value = 1.0;
  bool infinite = false;
  Witness witness;
};

ReversibilityResult reversibility_constant(const MetricModel& m, const std::vector<Vec>& points,
                                           int directions = 0);

struct UniformityConstants {
  double kappa = 1.0;
  double kappa_star = 1.0;
  double lambda_F = 1.0;
  bool lambda_infinite = false;
  long samples = 0;
  Witness kappa_witness, kappa_star_witness, lambda_witness;

  double dual_kappa() const { return 1.0 / kappa_star; }
  double dual_kappa_star() const { return 1.0 / kappa; }
};

UniformityConstants uniformity_constants(const MetricModel& m, const std::vector<Vec>& points,
                                         int directions = 0);

}  // namespace finsler
