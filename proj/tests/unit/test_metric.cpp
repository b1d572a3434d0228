#include "finsler/grid.hpp"
#include "finsler/metric_core.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace finsler;

namespace {

Mat identity2() { return Mat::Identity(2, 2); }

MetricPtr randers_half() { return make_randers(identity2(), make_vec({0.5, 0.0})); }

// ½F² Hessian in y by central differences.
Mat fd_half_hessian(const MetricModel& m, const Vec& x, const Vec& y, double h = 1e-4) {
  const int n = m.dim();
  auto e = [&](const Vec& v) { return 0.5 * std::pow(m.norm(x, v), 2); };
  Mat H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec pp = y, pm = y, mp = y, mm = y;
      pp[i] += h, pp[j] += h;
      pm[i] += h, pm[j] -= h;
      mp[i] -= h, mp[j] += h;
      mm[i] -= h, mm[j] -= h;
      H(i, j) = (e(pp) - e(pm) - e(mp) + e(mm)) / (4 * h * h);
    }
  return H;
}

// sup over the unit circle of ξ(y)/F(y), brute force.
double brute_dual(const MetricModel& m, const Vec& x, const Vec& xi, int n = 200000) {
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    double th = 2 * M_PI * k / n;
    Vec y = make_vec({std::cos(th), std::sin(th)});
    best = std::max(best, xi.dot(y) / m.norm(x, y));
  }
  return best;
}

Vec random_vec(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

MetricPtr random_minkowski(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Mat> terms;
  for (int k = 0; k < 2; ++k) {
    Mat r(2, 2);
    r << u(rng), u(rng), u(rng), u(rng);
    terms.push_back(r * r.transpose() + 0.2 * identity2());
  }
  return make_minkowski_norm(terms, make_vec({0.1 * u(rng), 0.1 * u(rng)}));
}

}  // namespace

TEST_CASE("Randers fundamental tensor at y = e1 matches the finite-difference Hessian") {
  auto m = randers_half();
  Vec x = make_vec({0.3, -0.2}), y = make_vec({1.0, 0.0});
  auto ft = fundamental_tensor(*m, x, y);
  Mat fd = fd_half_hessian(*m, x, y);
  CHECK(ft.g(0, 0) == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(ft.g(1, 1) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::abs(ft.g(0, 1)) < 1e-12);
  CHECK((ft.g - fd).norm() < 1e-6);
  CHECK((ft.g * ft.g_inv - identity2()).norm() < 1e-12);
}

TEST_CASE("generic expression metric reproduces the Randers tensor") {
  auto m = make_generic(2, "sqrt(y1^2 + y2^2) + 0.5*y1");
  auto ft = fundamental_tensor(*m, make_vec({0, 0}), make_vec({1, 0}));
  CHECK(ft.g(0, 0) == doctest::Approx(2.25).epsilon(1e-10));
  CHECK(ft.g(1, 1) == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("random Minkowski norms have positive definite fundamental tensors") {
  std::mt19937_64 rng(7);
  for (int s = 0; s < 1000; ++s) {
    auto m = random_minkowski(rng);
    Vec x = random_vec(rng, 2, 3), y = random_vec(rng, 2, 1);
    if (y.norm() < 1e-3) continue;
    auto ft = fundamental_tensor(*m, x, y);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(ft.g));
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
    CHECK((Eigen::Matrix2d(ft.g) - Eigen::Matrix2d(fd_half_hessian(*m, x, y, 1e-4 * y.norm()))).norm() <
          1e-4 * ft.g.norm());
  }
}

TEST_CASE("fundamental tensor of a zero direction is refused") {
  auto m = randers_half();
  try {
    fundamental_tensor(*m, make_vec({0, 0}), make_vec({0, 0}));
    FAIL("expected ZeroDirection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroDirection);
  }
}

TEST_CASE("Randers dual norm matches brute-force maximization") {
  auto m = randers_half();
  Vec x = make_vec({0, 0});
  CHECK(dual_norm(*m, x, make_vec({1, 0})) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(dual_norm(*m, x, make_vec({-1, 0})) == doctest::Approx(2.0).epsilon(1e-10));
  Vec xi = make_vec({0.3, -0.7});
  CHECK(dual_norm(*m, x, xi) == doctest::Approx(brute_dual(*m, x, xi)).epsilon(1e-6));
}

TEST_CASE("Newton dual norm of a generic metric matches brute force") {
  auto m = make_generic(2, "sqrt(y1^2 + 2*y2^2 + 0.5*(y1^4 + y2^4)/(y1^2 + y2^2)) + 0.2*y2");
  Vec x = make_vec({0, 0});
  for (Vec xi : {make_vec({1, 0}), make_vec({-0.4, 0.9}), make_vec({0.2, -1.3})})
    CHECK(dual_norm(*m, x, xi) == doctest::Approx(brute_dual(*m, x, xi)).epsilon(1e-6));
}

TEST_CASE("Legendre transform: roundtrip and norm preservation on random samples") {
  std::mt19937_64 rng(11);
  std::vector<MetricPtr> metrics{make_euclidean(2), randers_half(),
                                 make_riemannian_preset("hyperbolic-half-plane", 2),
                                 make_generic(2, "sqrt(y1^2 + y2^2 + x1^2*y2^2) + 0.3*y1/(1 + x2^2)")};
  for (const auto& m : metrics) {
    double worst_roundtrip = 0.0, worst_norm = 0.0;
    for (int s = 0; s < 1000; ++s) {
      Vec x = random_vec(rng, 2, 1.0);
      if (m->riemannian()) x[1] = 0.5 + std::abs(x[1]);
      Vec y = random_vec(rng, 2, 2.0);
      if (y.norm() < 1e-2) continue;
      Vec xi = legendre(*m, x, y);
      Vec back = legendre_inverse(*m, x, xi);
      worst_roundtrip = std::max(worst_roundtrip, (back - y).norm() / y.norm());
      double f = m->norm(x, y);
      worst_norm = std::max(worst_norm, std::abs(dual_norm(*m, x, xi) - f) / f);
    }
    INFO(m->family());
    CHECK(worst_roundtrip < 1e-8);
    CHECK(worst_norm < 1e-6);
  }
}

TEST_CASE("Legendre transform is ½∇F² and vanishes at zero") {
  auto m = randers_half();
  Vec x = make_vec({0, 0}), y = make_vec({0.6, -0.8});
  Vec xi = legendre(*m, x, y);
  double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vec p = y, q = y;
    p[i] += h, q[i] -= h;
    double fd = (0.25 / h) * (std::pow(m->norm(x, p), 2) - std::pow(m->norm(x, q), 2));
    CHECK(xi[i] == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK(legendre(*m, x, make_vec({0, 0})).norm() == 0.0);
}

TEST_CASE("gradient: du(∇u) = F*(du)² and Riemannian ∇u = g⁻¹du") {
  GridDomain d({-1, -1}, {1, 1}, {20, 20});
  auto u = ScalarField::sample(d, [](const Vec& x) { return std::sin(2 * x[0]) + x[1] * x[1] * x[0]; });
  auto randers = randers_half();
  auto grad = gradient_field(*randers, u);
  for (Index i = 0; i < d.size(); i += 7) {
    Vec du = u.differential(i);
    if (du.norm() < 1e-6) continue;
    double fs = dual_norm(*randers, d.center(i), du);
    CHECK(du.dot(grad[i]) == doctest::Approx(fs * fs).epsilon(1e-6));
  }
  auto hyp = make_riemannian_preset("hyperbolic-normal", 2);
  auto hgrad = gradient_field(*hyp, u);
  for (Index i = 0; i < d.size(); i += 13) {
    Vec du = u.differential(i);
    if (du.norm() < 1e-6) continue;
    Vec x = d.center(i);
    // any direction gives the Riemannian g(x)
    Mat g = fundamental_tensor(*hyp, x, make_vec({1, 0})).g;
    Vec oracle = g.ldlt().solve(du);
    CHECK((hgrad[i] - oracle).norm() < 1e-8 * (1 + oracle.norm()));
  }
}

TEST_CASE("weighted gradient: V = ∇u reproduces the gradient, fixed V is a linear solve") {
  GridDomain d({-1, -1}, {1, 1}, {16, 16});
  auto m = randers_half();
  auto u = ScalarField::sample(d, [](const Vec& x) { return std::cos(x[0] + 2 * x[1]) + 0.3 * x[0]; });
  auto grad = gradient_field(*m, u);
  auto w = weighted_gradient(*m, u, grad);
  for (Index i = 0; i < d.size(); ++i)
    if (grad[i].norm() > 1e-9) CHECK((w[i] - grad[i]).norm() < 1e-8 * grad[i].norm());

  std::vector<Vec> v(static_cast<std::size_t>(d.size()), make_vec({1, 0}));
  auto wv = weighted_gradient(*m, u, v);
  Mat g = fundamental_tensor(*m, make_vec({0, 0}), make_vec({1, 0})).g;
  for (Index i = 0; i < d.size(); i += 5) {
    Vec oracle = g.ldlt().solve(u.differential(i));
    CHECK((wv[i] - oracle).norm() < 1e-10 * (1 + oracle.norm()));
  }
}

TEST_CASE("reversibility: Randers b = 0.5 gives (1+b)/(1-b) = 3") {
  auto m = randers_half();
  std::vector<Vec> pts{make_vec({0, 0}), make_vec({1, 2})};
  auto r = reversibility_constant(*m, pts, 720);
  CHECK_FALSE(r.infinite);
  CHECK(r.value == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(reversibility_constant(*make_euclidean(2), pts).value == doctest::Approx(1.0));
  CHECK(reversibility_constant(*reverse_metric(m), pts, 720).value == doctest::Approx(r.value).epsilon(1e-9));
}

TEST_CASE("uniformity constants and the reversibility chain") {
  std::vector<Vec> pts{make_vec({0, 0})};
  auto e = uniformity_constants(*make_euclidean(2), pts);
  CHECK(e.kappa == doctest::Approx(1.0));
  CHECK(e.kappa_star == doctest::Approx(1.0));
  CHECK(e.lambda_F == doctest::Approx(1.0));

  auto r = uniformity_constants(*randers_half(), pts, 720);
  CHECK(r.lambda_F == doctest::Approx(3.0).epsilon(1e-6));
  double tol = 1e-6 * r.lambda_F;
  CHECK(1.0 <= r.lambda_F + tol);
  CHECK(r.lambda_F <= std::sqrt(r.kappa) + tol);
  CHECK(r.lambda_F <= std::sqrt(1.0 / r.kappa_star) + tol);

  // κ, κ* as sup/inf of g_y(v,v)/F(v)² over a direction grid, with g from
  // finite differences.
  auto m = randers_half();
  double sup = 0.0, inf = 1e300;
  for (int a = 0; a < 180; ++a)
    for (int b = 0; b < 180; ++b) {
      double ta = 2 * M_PI * a / 180, tb = 2 * M_PI * b / 180;
      Vec y = make_vec({std::cos(ta), std::sin(ta)}), v = make_vec({std::cos(tb), std::sin(tb)});
      Mat g = fd_half_hessian(*m, pts[0], y);
      double q = v.dot(g * v) / std::pow(m->norm(pts[0], v), 2);
      sup = std::max(sup, q), inf = std::min(inf, q);
    }
  CHECK(r.kappa >= sup * (1 - 1e-6));
  CHECK(r.kappa == doctest::Approx(sup).epsilon(1e-3));
  CHECK(r.kappa_star <= inf * (1 + 1e-6));
  CHECK(r.kappa_star == doctest::Approx(inf).epsilon(1e-3));
}

TEST_CASE("dual uniform ellipticity bounds hold on random covectors") {
  auto m = randers_half();
  std::vector<Vec> pts{make_vec({0, 0})};
  auto c = uniformity_constants(*m, pts, 720);
  std::mt19937_64 rng(5);
  for (int s = 0; s < 500; ++s) {
    Vec xi = random_vec(rng, 2, 1), eta = random_vec(rng, 2, 1);
    if (xi.norm() < 1e-3 || eta.norm() < 1e-3) continue;
    Mat gs = dual_fundamental_tensor(*m, pts[0], xi);
    double q = eta.dot(gs * eta), f = dual_norm(*m, pts[0], eta);
    CHECK(q >= c.dual_kappa_star() * f * f * (1 - 1e-6));
    CHECK(q <= c.dual_kappa() * f * f * (1 + 1e-6));
  }
}

TEST_CASE("reverse metric negates the drift and is an involution") {
  auto m = randers_half();
  auto r = reverse_metric(m);
  std::mt19937_64 rng(3);
  for (int s = 0; s < 100; ++s) {
    Vec x = random_vec(rng, 2, 1), y = random_vec(rng, 2, 1);
    CHECK(r->norm(x, y) == doctest::Approx(y.norm() - 0.5 * y[0]).epsilon(1e-12));
  }
  CHECK(reverse_metric(r) == m);
}

TEST_CASE("constructors validate their input") {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode{};
  };
  CHECK(code([] { make_randers(Mat::Identity(2, 2), make_vec({1.2, 0})); }) == ErrorCode::InvalidArgument);
  CHECK(code([] { make_randers(-Mat::Identity(2, 2), make_vec({0, 0})); }) == ErrorCode::NotPositiveDefinite);
  CHECK(code([] { make_riemannian_preset("no-such-chart", 2); }) == ErrorCode::InvalidArgument);
}
