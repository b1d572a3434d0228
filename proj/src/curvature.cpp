#include "finsler/curvature.hpp"

#include "finsler/metric_core.hpp"

#include <sstream>

namespace finsler {

namespace {

std::string describe(const Vec& x) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
  os << ')';
  return os.str();
}

Vec spray(const MetricModel& m, const Vec& x, const Vec& y) {
  const int n = m.dim();
  if (m.x_independent()) return Vec::Zero(n);
  const Jet f = m.norm_sq_jet(x, y, true);
  Mat gyy(n, n);
  Vec rhs(n);
  for (int l = 0; l < n; ++l) {
    double mixed = 0.0;
    for (int k = 0; k < n; ++k) mixed += f.h(k, n + l) * y[k];
    rhs[l] = mixed - f.g[l];
    for (int j = 0; j < n; ++j) gyy(l, j) = 0.5 * f.h(n + l, n + j);
  }
  return 0.25 * gyy.ldlt().solve(rhs);
}

bool finite(const Vec& v) { return v.allFinite(); }

// Ric_ij from the metric jets: Γ and ∂Γ in closed form.
Mat riemannian_ricci(const MetricModel& m, const Vec& x) {
  const int n = m.dim();
  const std::vector<Jet> gj = m.metric_matrix_jet(x);
  auto g = [&](int i, int j) { return 0.5 * (gj[i * n + j].v + gj[j * n + i].v); };
  auto dg = [&](int a, int i, int j) { return 0.5 * (gj[i * n + j].g[a] + gj[j * n + i].g[a]); };
  auto ddg = [&](int a, int b, int i, int j) { return 0.5 * (gj[i * n + j].h(a, b) + gj[j * n + i].h(a, b)); };
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = g(i, j);
  const Mat Gi = G.inverse();

  // Γ_{l,ij} and its x-derivatives.
  auto low = [&](int l, int i, int j) { return 0.5 * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j)); };
  auto dlow = [&](int a, int l, int i, int j) {
    return 0.5 * (ddg(a, i, j, l) + ddg(a, j, i, l) - ddg(a, l, i, j));
  };
  std::vector<double> gam(n * n * n), dgam(n * n * n * n);
  auto Gam = [&](int k, int i, int j) -> double& { return gam[(k * n + i) * n + j]; };
  auto dGam = [&](int a, int k, int i, int j) -> double& { return dgam[((a * n + k) * n + i) * n + j]; };
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += Gi(k, l) * low(l, i, j);
        Gam(k, i, j) = s;
      }
  for (int a = 0; a < n; ++a) {
    Mat dG(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dG(i, j) = dg(a, i, j);
    const Mat dGi = -Gi * dG * Gi;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += dGi(k, l) * low(l, i, j) + Gi(k, l) * dlow(a, l, i, j);
          dGam(a, k, i, j) = s;
        }
  }
  Mat ric = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) {
        s += dGam(k, k, i, j) - dGam(j, k, i, k);
        for (int l = 0; l < n; ++l) s += Gam(k, k, l) * Gam(l, i, j) - Gam(k, j, l) * Gam(l, i, k);
      }
      ric(i, j) = s;
    }
  return ric;
}

// Trace of Rⁱ_k = 2∂_k Gⁱ − yʲ∂²Gⁱ/∂xʲ∂yᵏ + 2Gʲ∂²Gⁱ/∂yʲ∂yᵏ − ∂Gⁱ/∂yʲ ∂Gʲ/∂yᵏ
// with central differences of relative step s.
double spray_ricci(const MetricModel& m, const Vec& x, const Vec& y, double s) {
  const int n = m.dim();
  const double hx = s * (1.0 + x.norm());
  const double hy = s * y.norm();
  auto G = [&](const Vec& xx, const Vec& yy) -> Vec { return spray(m, xx, yy); };
  auto ex = [&](int k, double h) -> Vec {
    Vec e = Vec::Zero(n);
    e[k] = h;
    return e;
  };
  const Vec g0 = G(x, y);
  std::vector<Vec> gx(n), gy(n);
  for (int k = 0; k < n; ++k) {
    gx[k] = (G(x + ex(k, hx), y) - G(x - ex(k, hx), y)) / (2 * hx);
    gy[k] = (G(x, y + ex(k, hy)) - G(x, y - ex(k, hy))) / (2 * hy);
  }
  double tr = 0.0;
  for (int k = 0; k < n; ++k) {
    // Σ_j yʲ ∂²G/∂xʲ∂yᵏ is the y_k-derivative of the directional x-derivative along y.
    auto dxy = [&](const Vec& yy) -> Vec {
      return (G(x + hx * y, yy) - G(x - hx * y, yy)) / (2 * hx);
    };
    const Vec mixed = (dxy(y + ex(k, hy)) - dxy(y - ex(k, hy))) / (2 * hy);
    double r = 2.0 * gx[k][k] - mixed[k];
    for (int j = 0; j < n; ++j) {
      Vec yy;
      if (j == k) {
        yy = (G(x, y + ex(k, hy)) - 2.0 * g0 + G(x, y - ex(k, hy))) / (hy * hy);
      } else {
        yy = (G(x, y + ex(j, hy) + ex(k, hy)) - G(x, y + ex(j, hy) - ex(k, hy)) - G(x, y - ex(j, hy) + ex(k, hy)) +
              G(x, y - ex(j, hy) - ex(k, hy))) /
             (4 * hy * hy);
      }
      r += 2.0 * g0[j] * yy[k] - gy[j][k] * gy[k][j];
    }
    tr += r;
  }
  return tr;
}

}  // namespace

SprayValue spray_coefficients(const MetricModel& m, const Vec& x, const Vec& y) {
  if (y.norm() < kZeroDirection) throw Error(ErrorCode::ZeroDirection, "spray at y = 0");
  return {x, y, spray(m, x, y)};
}

GeodesicPath integrate_geodesic(const MetricModel& m, const Vec& x0, const Vec& y0, double T, int steps,
                                const GridDomain* bounds) {
  if (y0.norm() < kZeroDirection) throw Error(ErrorCode::ZeroDirection, "geodesic with zero initial velocity");
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "geodesic needs at least one step");
  const double dt = T / steps;
  GeodesicPath p;
  p.speed = m.norm(x0, y0);
  Vec x = x0, v = y0;
  auto leave = [&](double t) {
    throw Error(ErrorCode::LeftDomain, "geodesic from " + describe(x0) + " leaves the chart at t = " + std::to_string(t));
  };
  auto record = [&](double t) {
    if ((bounds && !bounds->contains(x)) || !finite(x) || !finite(v)) leave(t);
    const double f = m.norm(x, v);
    if (!std::isfinite(f)) leave(t);
    p.t.push_back(t);
    p.points.push_back(x);
    p.velocities.push_back(v);
    p.speed_drift = std::max(p.speed_drift, std::abs(f - p.speed) / p.speed);
  };
  record(0.0);
  for (int k = 0; k < steps; ++k) {
    const Vec a1 = -2.0 * spray(m, x, v);
    const Vec x2 = x + 0.5 * dt * v, v2 = v + 0.5 * dt * a1;
    const Vec a2 = -2.0 * spray(m, x2, v2);
    const Vec x3 = x + 0.5 * dt * v2, v3 = v + 0.5 * dt * a2;
    const Vec a3 = -2.0 * spray(m, x3, v3);
    const Vec x4 = x + dt * v3, v4 = v + dt * a3;
    const Vec a4 = -2.0 * spray(m, x4, v4);
    x = x + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
    v = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    record((k + 1) * dt);
  }
  return p;
}

double distortion(const MetricModel& m, const MeasureDensity& measure, const Vec& x, const Vec& y) {
  if (y.norm() < kZeroDirection) throw Error(ErrorCode::ZeroDirection, "distortion at y = 0");
  const double s = measure(x);
  if (!(s > 0.0) || !std::isfinite(s))
    throw Error(ErrorCode::NonPositiveDensity, "density " + std::to_string(s) + " at " + describe(x));
  const FundamentalTensor g = fundamental_tensor(m, x, y);
  return 0.5 * std::log(g.g.determinant()) - std::log(s);
}

SCurvature s_curvature(const MetricModel& m, const MeasureDensity& measure, const Vec& x, const Vec& y,
                       const GridDomain* bounds) {
  if (y.norm() < kZeroDirection) throw Error(ErrorCode::ZeroDirection, "S-curvature at y = 0");
  const double dt = 1e-3 / m.norm(x, y);
  const GeodesicPath fw = integrate_geodesic(m, x, y, 2 * dt, 2, bounds);
  const GeodesicPath bw = integrate_geodesic(m, x, y, -2 * dt, 2, bounds);
  auto tau = [&](const GeodesicPath& p, int k) { return distortion(m, measure, p.points[k], p.velocities[k]); };
  const double t0 = tau(fw, 0), p1 = tau(fw, 1), p2 = tau(fw, 2), m1 = tau(bw, 1), m2 = tau(bw, 2);
  SCurvature s;
  s.S = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * dt);
  s.S_dot = (-p2 + 16.0 * p1 - 30.0 * t0 + 16.0 * m1 - m2) / (12.0 * dt * dt);
  return s;
}

double ricci_scalar(const MetricModel& m, const Vec& x, const Vec& y) {
  if (y.norm() < kZeroDirection) throw Error(ErrorCode::ZeroDirection, "Ricci curvature at y = 0");
  if (m.x_independent()) return 0.0;
  if (m.riemannian()) {
    const Mat r = riemannian_ricci(m, x);
    return y.dot(r * y);
  }
  const double f = m.norm(x, y);
  const Vec u = y / f;
  const double d1 = spray_ricci(m, x, u, 4e-3), d2 = spray_ricci(m, x, u, 2e-3), d3 = spray_ricci(m, x, u, 1e-3);
  const double r1 = (4.0 * d2 - d1) / 3.0, r2 = (4.0 * d3 - d2) / 3.0;
  if (!(std::abs(r1 - r2) <= 1e-3 * std::max(1.0, std::abs(r2)))) {
    std::ostringstream os;
    os << "Richardson estimates " << r1 << " and " << r2 << " disagree at x = " << describe(x);
    throw Error(ErrorCode::StencilUnstable, os.str());
  }
  return r2 * f * f;
}

double weighted_ricci(const MetricModel& m, const MeasureDensity& measure, const Vec& x, const Vec& y, double N,
                      const GridDomain* bounds) {
  if (N == m.dim()) throw Error(ErrorCode::InvalidN, "N equals the dimension");
  const double ric = ricci_scalar(m, x, y);
  const SCurvature s = s_curvature(m, measure, x, y, bounds);
  if (std::isinf(N)) return ric + s.S_dot;
  return ric + s.S_dot - s.S * s.S / (N - m.dim());
}

std::vector<Vec> sample_points(const GridDomain& domain, int per_axis) {
  if (per_axis < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample per axis");
  const int n = domain.dim();
  Index total = 1;
  for (int k = 0; k < n; ++k) total *= per_axis;
  std::vector<Vec> out;
  for (Index i = 0; i < total; ++i) {
    Vec x(n);
    Index r = i;
    for (int k = 0; k < n; ++k) {
      const double t = (static_cast<double>(r % per_axis) + 0.5) / per_axis;
      x[k] = domain.lo(k) + t * (domain.hi(k) - domain.lo(k));
      r /= per_axis;
    }
    out.push_back(x);
  }
  return out;
}

CurvatureReport curvature_report(const MetricModel& m, const MeasureDensity& measure, const GridDomain& domain,
                                 const std::vector<double>& Ns, int per_axis, int directions) {
  for (double N : Ns)
    if (N == m.dim()) throw Error(ErrorCode::InvalidN, "N equals the dimension");
  CurvatureReport rep;
  rep.Ns = Ns;
  rep.min_ric_N.assign(Ns.size(), std::numeric_limits<double>::infinity());
  rep.min_ric = rep.min_ric_inf = std::numeric_limits<double>::infinity();
  const std::vector<Vec> dirs = direction_grid(m.dim(), directions);
  for (const Vec& x : sample_points(domain, per_axis)) {
    for (const Vec& d : dirs) {
      CurvatureSample s;
      s.x = x;
      s.y = d / m.norm(x, d);
      s.tau = distortion(m, measure, x, s.y);
      const SCurvature sc = s_curvature(m, measure, x, s.y, &domain);
      s.S = sc.S;
      s.S_dot = sc.S_dot;
      s.ric = ricci_scalar(m, x, s.y);
      s.ric_inf = s.ric + s.S_dot;
      for (std::size_t k = 0; k < Ns.size(); ++k) {
        const double v = std::isinf(Ns[k]) ? s.ric_inf : s.ric_inf - s.S * s.S / (Ns[k] - m.dim());
        s.ric_N.push_back(v);
        rep.min_ric_N[k] = std::min(rep.min_ric_N[k], v);
      }
      rep.min_ric = std::min(rep.min_ric, s.ric);
      if (s.ric_inf < rep.min_ric_inf) {
        rep.min_ric_inf = s.ric_inf;
        rep.ric_inf_witness = rep.samples.size();
      }
      rep.samples.push_back(std::move(s));
    }
  }
  return rep;
}

RicciCertification check_nonnegative_ricci_infinity(const MetricModel& m, const MeasureDensity& measure,
                                                    const GridDomain& domain, double tolerance, int per_axis,
                                                    int directions) {
  const CurvatureReport rep = curvature_report(m, measure, domain, {}, per_axis, directions);
  RicciCertification c;
  c.tolerance = tolerance;
  c.samples = static_cast<long>(rep.samples.size());
  c.minimum = rep.min_ric_inf;
  c.witness_x = rep.samples[rep.ric_inf_witness].x;
  c.witness_y = rep.samples[rep.ric_inf_witness].y;
  c.pass = c.minimum >= -tolerance;
  return c;
}

}  // namespace finsler
