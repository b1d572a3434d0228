#include "finsler/curvature.hpp"
#include "finsler/metric_core.hpp"

#include <doctest.h>

#include <cmath>

using namespace finsler;

namespace {

MetricPtr half_plane() { return make_riemannian_preset("hyperbolic-half-plane", 2); }

// Gⁱ = ½ Γⁱ_jk yʲyᵏ with Γ from finite differences of g = I/x2².
Vec christoffel_spray(const Vec& x, const Vec& y) {
  auto g = [](const Vec& p) { return Mat(Mat::Identity(2, 2) / (p[1] * p[1])); };
  const double h = 1e-5;
  Mat dg[2];
  for (int k = 0; k < 2; ++k) {
    Vec p = x, q = x;
    p[k] += h, q[k] -= h;
    dg[k] = (g(p) - g(q)) / (2 * h);
  }
  Mat ginv = g(x).inverse();
  Vec G = Vec::Zero(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double gamma = 0.0;
        for (int l = 0; l < 2; ++l) gamma += 0.5 * ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
        G[i] += 0.5 * gamma * y[j] * y[k];
      }
  return G;
}

}  // namespace

TEST_CASE("spray vanishes for x-independent metrics") {
  auto m = make_randers(Mat::Identity(2, 2), make_vec({0.5, 0}));
  CHECK(spray_coefficients(*m, make_vec({1, 2}), make_vec({0.3, -0.4})).G.norm() == 0.0);
}

TEST_CASE("half-plane spray matches the Christoffel oracle and is 2-homogeneous") {
  auto m = half_plane();
  for (Vec y : {make_vec({1, 0}), make_vec({0.3, -0.8})}) {
    Vec x = make_vec({0.2, 1.0});
    Vec G = spray_coefficients(*m, x, y).G;
    Vec oracle = christoffel_spray(x, y);
    CHECK((G - oracle).norm() < 1e-6 * (1 + oracle.norm()));
    Vec G2 = spray_coefficients(*m, x, 2 * y).G;
    CHECK((G2 - 4 * G).norm() < 1e-8 * G2.norm());
  }
  Vec G = spray_coefficients(*m, make_vec({0, 1}), make_vec({1, 0})).G;
  CHECK(std::abs(G[0]) < 1e-12);
  CHECK(G[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("half-plane vertical geodesic stays on the axis with x2 = e^t") {
  auto m = half_plane();
  auto path = integrate_geodesic(*m, make_vec({0, 1}), make_vec({0, 1}), 1.0, 400);
  for (const Vec& p : path.points) CHECK(std::abs(p[0]) < 1e-12);
  CHECK(path.points.back()[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
  // arc length by trapezoid over the recorded velocities equals T·F(x0, y0)
  double len = 0.0;
  for (std::size_t k = 1; k < path.points.size(); ++k)
    len += 0.5 * (path.t[k] - path.t[k - 1]) *
           (m->norm(path.points[k], path.velocities[k]) + m->norm(path.points[k - 1], path.velocities[k - 1]));
  CHECK(len == doctest::Approx(1.0 * path.speed).epsilon(1e-5));
  CHECK(path.speed_drift < 1e-6);
}

TEST_CASE("geodesic leaving the chart is reported") {
  GridDomain box({-1, 0.5}, {1, 2}, {10, 10});
  try {
    integrate_geodesic(*half_plane(), make_vec({0, 1}), make_vec({0, 1}), 5.0, 100, &box);
    FAIL("expected LeftDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LeftDomain);
  }
}

TEST_CASE("distortion closed forms") {
  auto e = make_euclidean(2);
  auto weight = MeasureDensity::expression(2, "exp(x1)");
  CHECK(distortion(*e, weight, make_vec({2, 0.3}), make_vec({0, 1})) == doctest::Approx(-2.0).epsilon(1e-12));
  auto r = make_randers(Mat::Identity(2, 2), make_vec({0.5, 0}));
  CHECK(distortion(*r, MeasureDensity::lebesgue(2), make_vec({0, 0}), make_vec({1, 0})) ==
        doctest::Approx(0.5 * std::log(2.25 * 1.5)).epsilon(1e-10));
}

TEST_CASE("S-curvature of exponential weights: S = -c y1, S' = 0") {
  auto weight = MeasureDensity::expression(2, "exp(1.5*x1)");
  Vec y = make_vec({0.6, 0.8});
  auto s = s_curvature(*make_euclidean(2), weight, make_vec({0.1, -0.2}), y);
  CHECK(s.S == doctest::Approx(-1.5 * 0.6).epsilon(1e-6));
  CHECK(std::abs(s.S_dot) < 1e-6);
  auto r = make_randers(Mat::Identity(2, 2), make_vec({0.5, 0}));
  Vec yr = y / r->norm(make_vec({0, 0}), y);
  auto sr = s_curvature(*r, weight, make_vec({0.1, -0.2}), yr);
  CHECK(sr.S == doctest::Approx(-1.5 * yr[0]).epsilon(1e-6));
  CHECK(std::abs(sr.S_dot) < 1e-6);
}

TEST_CASE("Ricci curvature of constant-curvature charts") {
  auto hp = half_plane();
  Vec x = make_vec({0.3, 1.2});
  Vec y = make_vec({0.6, 0.8});
  y /= hp->norm(x, y);
  CHECK(ricci_scalar(*hp, x, y) == doctest::Approx(-1.0).epsilon(1e-8));

  auto sphere = make_riemannian_preset("round-sphere", 2);
  Vec xs = make_vec({0.2, -0.4});
  Vec ys = make_vec({1, 1});
  ys /= sphere->norm(xs, ys);
  CHECK(ricci_scalar(*sphere, xs, ys) == doctest::Approx(1.0).epsilon(1e-8));

  auto normal = make_riemannian_preset("hyperbolic-normal", 2);
  Vec xn = make_vec({1.0, 0.5});
  Vec yn = make_vec({0.2, 1});
  yn /= normal->norm(xn, yn);
  CHECK(ricci_scalar(*normal, xn, yn) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("generic-path Ricci of the half-plane written as an expression") {
  auto g = make_generic(2, "sqrt(y1^2 + y2^2)/x2");
  Vec x = make_vec({0.1, 1.0}), y = make_vec({0.8, 0.6});
  y /= g->norm(x, y);
  CHECK(ricci_scalar(*g, x, y) == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("weighted Ricci of e^x1 on the plane: Ric_inf = 0, Ric_N = -(y1)^2/(N - n)") {
  auto e = make_euclidean(2);
  auto weight = MeasureDensity::expression(2, "exp(x1)");
  Vec x = make_vec({0.5, 0.5}), y = make_vec({0.6, 0.8});
  CHECK(std::abs(weighted_ricci(*e, weight, x, y, kInfiniteN)) < 1e-6);
  for (double N : {3.0, 10.0})
    CHECK(weighted_ricci(*e, weight, x, y, N) == doctest::Approx(-0.36 / (N - 2)).epsilon(1e-5));
  try {
    weighted_ricci(*e, weight, x, y, 2.0);
    FAIL("expected InvalidN");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::InvalidN);
  }
}

TEST_CASE("Randers with exponential weight has Ric_inf = 0 over the sampled bundle") {
  auto r = make_randers(Mat::Identity(2, 2), make_vec({0.5, 0}));
  auto rep = curvature_report(*r, MeasureDensity::expression(2, "exp(x1)"), GridDomain({-2, -2}, {2, 2}, {8, 8}),
                              {3.0}, 3, 12);
  CHECK(rep.samples.size() == 9 * 12);
  CHECK(std::abs(rep.min_ric_inf) < 1e-6);
  CHECK(rep.min_ric == 0.0);
}

TEST_CASE("Ric_inf >= 0 certification") {
  GridDomain box({-2, -2}, {2, 2}, {8, 8});
  auto e = make_euclidean(2);
  auto flat = check_nonnegative_ricci_infinity(*e, MeasureDensity::expression(2, "exp(x1)"), box, 1e-6, 3, 8);
  CHECK(flat.pass);
  CHECK(std::abs(flat.minimum) < 1e-6);

  auto gauss = check_nonnegative_ricci_infinity(*e, MeasureDensity::expression(2, "exp(-(x1^2 + x2^2)/2)"), box,
                                                1e-6, 3, 8);
  CHECK(gauss.pass);
  CHECK(gauss.minimum == doctest::Approx(1.0).epsilon(1e-5));

  auto hp = half_plane();
  GridDomain upper({-1, 0.5}, {1, 2.5}, {8, 8});
  auto hyp = check_nonnegative_ricci_infinity(*hp, MeasureDensity::riemannian_volume(hp), upper, 1e-6, 3, 8);
  CHECK_FALSE(hyp.pass);
  CHECK(hyp.minimum == doctest::Approx(-1.0).epsilon(1e-5));
}
