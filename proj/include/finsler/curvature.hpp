#pragma once

#include "finsler/grid.hpp"
#include "finsler/metric.hpp"

#include <limits>
#include <vector>

namespace finsler {

struct SprayValue {
  Vec x, y;
  Vec G;
};

// Gⁱ = ¼ gⁱˡ([F²]_{xᵏyˡ} yᵏ − [F²]_{xˡ}); exactly zero for x-independent
// families.
SprayValue spray_coefficients(const MetricModel& m, const Vec& x, const Vec& y);

struct GeodesicPath {
  std::vector<double> t;
  std::vector<Vec> points;
  std::vector<Vec> velocities;
  double speed = 0.0;        // F(x0, y0)
  double speed_drift = 0.0;  // max relative deviation of F(γ, γ̇) from speed
};

// RK4 on γ̈ = −2G(γ, γ̇); T may be negative. LeftDomain when the path leaves
// `bounds` (if given) or the metric stops being finite.
GeodesicPath integrate_geodesic(const MetricModel& m, const Vec& x0, const Vec& y0, double T, int steps,
                                const GridDomain* bounds = nullptr);

// τ = ln(√det g(x, y) / σ(x)).
double distortion(const MetricModel& m, const MeasureDensity& measure, const Vec& x, const Vec& y);

struct SCurvature {
  double S = 0.0;
  double S_dot = 0.0;
};

// First and second t-derivatives of τ(γ, γ̇) at t = 0 by 5-point stencils
// along the geodesic, with dt·F(x, y) = 1e-3.
SCurvature s_curvature(const MetricModel& m, const MeasureDensity& measure, const Vec& x, const Vec& y,
                       const GridDomain* bounds = nullptr);

// Ric(y): closed form from Christoffel symbols for Riemannian families, zero
// for x-independent ones, otherwise the trace of the spray curvature by
// nested central differences with a two-level Richardson guard.
double ricci_scalar(const MetricModel& m, const Vec& x, const Vec& y);

inline constexpr double kInfiniteN = std::numeric_limits<double>::infinity();

// Ric_∞ = Ric + Ṡ;  Ric_N = Ric + Ṡ − S²/(N − n).
double weighted_ricci(const MetricModel& m, const MeasureDensity& measure, const Vec& x, const Vec& y, double N,
                      const GridDomain* bounds = nullptr);

struct CurvatureSample {
  Vec x, y;
  double tau = 0.0;
  double S = 0.0;
  double S_dot = 0.0;
  double ric = 0.0;
  double ric_inf = 0.0;
  std::vector<double> ric_N;
};

struct CurvatureReport {
  std::vector<double> Ns;
  std::vector<CurvatureSample> samples;
  double min_ric = 0.0;
  double min_ric_inf = 0.0;
  std::vector<double> min_ric_N;
  std::size_t ric_inf_witness = 0;
};

// Base points on a `per_axis`^n product grid inset half a step from the
// domain faces; `directions` F-unit directions per point.
std::vector<Vec> sample_points(const GridDomain& domain, int per_axis);

CurvatureReport curvature_report(const MetricModel& m, const MeasureDensity& measure, const GridDomain& domain,
                                 const std::vector<double>& Ns, int per_axis = 5, int directions = 16);

struct RicciCertification {
  bool pass = false;
  double minimum = 0.0;
  double tolerance = 0.0;
  Vec witness_x, witness_y;
  long samples = 0;
};

RicciCertification check_nonnegative_ricci_infinity(const MetricModel& m, const MeasureDensity& measure,
                                                    const GridDomain& domain, double tolerance, int per_axis = 5,
                                                    int directions = 16);

}  // namespace finsler
