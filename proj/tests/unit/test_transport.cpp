#include "finsler/transport.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace finsler;

namespace {

Chart flat(int dim, double half, int cells) {
  std::vector<double> lo(dim, -half), hi(dim, half);
  std::vector<int> n(dim, cells);
  return Chart::make(make_euclidean(dim), MeasureDensity::lebesgue(dim), GridDomain(lo, hi, n));
}

BorelMask interval(const GridDomain& g, double a, double b) {
  BorelMask m(g);
  for (Index i = 0; i < g.size(); ++i)
    if (g.center(i)[0] > a && g.center(i)[0] < b) m.set(i);
  return m;
}

BorelMask disk(const GridDomain& g, const Vec& c, double r) {
  BorelMask m(g);
  for (Index i = 0; i < g.size(); ++i)
    if ((g.center(i) - c).norm() < r) m.set(i);
  return m;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("Dirac masses: W_p is the distance") {
  Chart c = flat(2, 2, 40);
  Index a = c.domain.locate(make_vec({-1.05, 0.05})), b = c.domain.locate(make_vec({0.95, 0.05}));
  for (int p : {1, 2}) {
    auto w = wasserstein_p(c, DiscreteMeasure::dirac(a), DiscreteMeasure::dirac(b), p);
    CHECK(w.distance == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("Randers 1-d: W1(d0, d_e1) = 1.5 but W1(d_e1, d0) = 0.5") {
  Chart c = Chart::make(make_randers(Mat::Identity(1, 1), make_vec({0.5})), MeasureDensity::lebesgue(1),
                        GridDomain({-2}, {2}, {400}));
  Index zero = c.domain.locate(make_vec({0.005})), one = c.domain.locate(make_vec({1.005}));
  auto fwd = wasserstein_p(c, DiscreteMeasure::dirac(zero), DiscreteMeasure::dirac(one), 1);
  auto bwd = wasserstein_p(c, DiscreteMeasure::dirac(one), DiscreteMeasure::dirac(zero), 1);
  CHECK(fwd.distance == doctest::Approx(1.5).epsilon(0.02));
  CHECK(bwd.distance == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("two-point measures match brute force over the coupling family") {
  Chart c = Chart::make(make_randers(Mat::Identity(1, 1), make_vec({0.5})), MeasureDensity::lebesgue(1),
                        GridDomain({-3}, {3}, {600}));
  const double xs[2] = {-1.005, 0.495}, zs[2] = {-0.505, 1.995};
  auto F = [](double v) { return v > 0 ? 1.5 * v : 0.5 * -v; };
  DiscreteMeasure m0, m1;
  for (int k = 0; k < 2; ++k) {
    m0.cells.push_back(c.domain.locate(make_vec({xs[k]})));
    m1.cells.push_back(c.domain.locate(make_vec({zs[k]})));
    m0.weights.push_back(0.5), m1.weights.push_back(0.5);
  }
  for (int p : {1, 2}) {
    double best = 1e300;
    for (int s = 0; s <= 1000; ++s) {
      double a = 0.5 * s / 1000, b = 0.5 - a;
      double cost = a * std::pow(F(zs[0] - xs[0]), p) + b * std::pow(F(zs[1] - xs[0]), p) +
                    b * std::pow(F(zs[0] - xs[1]), p) + a * std::pow(F(zs[1] - xs[1]), p);
      best = std::min(best, cost);
    }
    auto w = wasserstein_p(c, m0, m1, p);
    CHECK(w.cost == doctest::Approx(best).epsilon(0.02));
  }
}

TEST_CASE("1-d Euclidean W2 of uniform measures equals the quantile coupling") {
  Chart c = flat(1, 4, 400);
  auto m0 = DiscreteMeasure::uniform_on(interval(c.domain, -2.0, -1.0), c.cell_mass);
  auto m1 = DiscreteMeasure::uniform_on(interval(c.domain, 0.5, 1.5), c.cell_mass);
  REQUIRE(m0.cells.size() == m1.cells.size());
  std::vector<double> x, z;
  for (Index i : m0.cells) x.push_back(c.domain.center(i)[0]);
  for (Index i : m1.cells) z.push_back(c.domain.center(i)[0]);
  std::sort(x.begin(), x.end()), std::sort(z.begin(), z.end());
  double w2sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) w2sq += (z[k] - x[k]) * (z[k] - x[k]) / static_cast<double>(x.size());
  auto w = wasserstein_p(c, m0, m1, 2);
  CHECK(w.distance == doctest::Approx(std::sqrt(w2sq)).epsilon(1e-9));
  CHECK(w.plan.marginal_error() < 1e-10);
}

TEST_CASE("random pairs: exact marginals and W1 <= W2") {
  Chart c = flat(2, 3, 40);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-2, 2), rad(0.2, 0.6);
  for (int s = 0; s < 6; ++s) {
    auto m0 = DiscreteMeasure::uniform_on(disk(c.domain, make_vec({pos(rng), pos(rng)}), rad(rng)), c.cell_mass);
    auto m1 = DiscreteMeasure::uniform_on(disk(c.domain, make_vec({pos(rng), pos(rng)}), rad(rng)), c.cell_mass);
    auto w1 = wasserstein_p(c, m0, m1, 1);
    auto w2 = wasserstein_p(c, m0, m1, 2);
    CHECK(w1.plan.marginal_error() < 1e-10);
    CHECK(w2.plan.marginal_error() < 1e-10);
    CHECK(w1.distance <= w2.distance * (1 + 1e-12));
  }
}

TEST_CASE("identical measures are at distance zero") {
  Chart c = flat(2, 2, 40);
  auto m = DiscreteMeasure::uniform_on(disk(c.domain, make_vec({0.3, -0.2}), 0.5), c.cell_mass);
  CHECK(wasserstein_p(c, m, m, 2).distance == doctest::Approx(0.0));
}

TEST_CASE("input validation") {
  Chart c = flat(1, 10, 1000);
  auto big = DiscreteMeasure::uniform_on(interval(c.domain, -9, 0), c.cell_mass);
  auto small = DiscreteMeasure::dirac(c.domain.locate(make_vec({3.0})));
  CHECK(big.cells.size() > kMaxSupport);
  CHECK(code_of([&] { wasserstein_p(c, big, small, 2); }) == ErrorCode::SupportTooLarge);
  DiscreteMeasure bad = small;
  bad.weights[0] = 0.9;
  CHECK(code_of([&] { wasserstein_p(c, bad, small, 2); }) == ErrorCode::InfeasibleMarginals);
  bad.weights[0] = -1.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InfeasibleMarginals);
  CHECK(code_of([&] { wasserstein_p(c, small, small, 3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("relative entropy of the normalized reference is -log(mass)") {
  for (int cells : {1000, 2000}) {
    Chart c = Chart::make(make_euclidean(1), MeasureDensity::expression(1, "exp(x1)"), GridDomain({-5}, {5}, {cells}));
    auto mu = DiscreteMeasure::uniform_on(interval(c.domain, 0.0, 1.0), c.cell_mass);
    CHECK(relative_entropy(mu, c.cell_mass) == doctest::Approx(-std::log(std::exp(1.0) - 1.0)).epsilon(0.02));
  }
}

TEST_CASE("relative entropy is additive over product measures") {
  GridDomain g1({0}, {4}, {8}), g2({0, 0}, {4, 4}, {8, 8});
  std::vector<double> w1{0, 0.1, 0.2, 0.3, 0.4, 0, 0, 0}, w2{0, 0, 0.5, 0.25, 0.25, 0, 0, 0};
  auto measure1 = [&](const std::vector<double>& w) {
    DiscreteMeasure m;
    for (Index i = 0; i < 8; ++i)
      if (w[i] > 0) m.cells.push_back(i), m.weights.push_back(w[i]);
    return m;
  };
  DiscreteMeasure prod;
  for (Index j = 0; j < 8; ++j)
    for (Index i = 0; i < 8; ++i)
      if (w1[i] * w2[j] > 0) prod.cells.push_back(g2.index({int(i), int(j), 0})), prod.weights.push_back(w1[i] * w2[j]);
  auto mass1 = MeasureDensity::lebesgue(1).cell_masses(g1);
  auto mass2 = MeasureDensity::lebesgue(2).cell_masses(g2);
  double sum = relative_entropy(measure1(w1), mass1) + relative_entropy(measure1(w2), mass1);
  CHECK(relative_entropy(prod, mass2) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("displacement interpolation reproduces the endpoints") {
  Chart c = flat(1, 4, 400);
  auto m0 = DiscreteMeasure::uniform_on(interval(c.domain, -2.0, -1.0), c.cell_mass);
  auto m1 = DiscreteMeasure::uniform_on(interval(c.domain, 0.5, 2.5), c.cell_mass);
  auto w = wasserstein_p(c, m0, m1, 2);
  auto it = displacement_interpolation(c, w.plan, {0.0, 1.0});
  REQUIRE(it.size() == 2);
  CHECK(it[0].nearest.cells == m0.cells);
  CHECK(it[1].nearest.cells == m1.cells);
}

TEST_CASE("1-d interpolants of uniform intervals are uniform on the interpolated interval") {
  Chart c = flat(1, 4, 400);
  auto m0 = DiscreteMeasure::uniform_on(interval(c.domain, -2.0, -1.0), c.cell_mass);
  auto m1 = DiscreteMeasure::uniform_on(interval(c.domain, 0.5, 2.5), c.cell_mass);
  auto w = wasserstein_p(c, m0, m1, 2);
  auto it = displacement_interpolation(c, w.plan, {0.5});
  double lo = 1e9, hi = -1e9, h = c.domain.spacing(0);
  for (Index i : it[0].nearest.cells) lo = std::min(lo, c.domain.center(i)[0]), hi = std::max(hi, c.domain.center(i)[0]);
  CHECK(std::abs(lo - (-0.75)) < 2 * h);
  CHECK(std::abs(hi - 0.75) < 2 * h);
  // displacement convexity of the entropy holds for disjoint intervals
  auto rep = cd_convexity_check(c, m0, m1, {0.25, 0.5, 0.75}, true);
  CHECK(rep.all_pass);
}

TEST_CASE("W2 geodesic property: W2(mu_t, mu_s) = (s - t) W2(mu_0, mu_1) within 5%") {
  Chart c = flat(2, 2.5, 100);
  auto m0 = DiscreteMeasure::uniform_on(disk(c.domain, make_vec({-1, 0}), 0.3), c.cell_mass);
  auto m1 = DiscreteMeasure::uniform_on(disk(c.domain, make_vec({1, 0.5}), 0.35), c.cell_mass);
  auto w = wasserstein_p(c, m0, m1, 2);
  auto it = displacement_interpolation(c, w.plan, {0.0, 0.25, 0.5, 0.75});
  auto between = [&](int a, int b) { return wasserstein_p(c, it[a].nearest, it[b].nearest, 2).distance; };
  CHECK(between(1, 3) == doctest::Approx(0.5 * w.distance).epsilon(0.05));
  CHECK(between(0, 2) == doctest::Approx(0.5 * w.distance).epsilon(0.05));
}

TEST_CASE("entropy convexity is an equality for mu_0 = mu_1") {
  Chart c = Chart::make(make_euclidean(1), MeasureDensity::expression(1, "exp(x1)"), GridDomain({-3}, {3}, {600}));
  auto m = DiscreteMeasure::uniform_on(interval(c.domain, -1.0, 0.5), c.cell_mass);
  auto rep = cd_convexity_check(c, m, m, {0.25, 0.5, 0.75}, true);
  CHECK(rep.w2 == doctest::Approx(0.0));
  for (const auto& row : rep.rows) {
    CHECK(row.entropy == doctest::Approx(row.chord).epsilon(1e-10));
    CHECK(row.pass);
  }
}

TEST_CASE("entropy convexity on the weighted line for random interval pairs") {
  Chart c = Chart::make(make_euclidean(1), MeasureDensity::expression(1, "exp(x1)"), GridDomain({-6}, {6}, {1200}));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> start(-4, 2), len(0.3, 2.0);
  for (int s = 0; s < 5; ++s) {
    double a = start(rng), b = start(rng);
    auto m0 = DiscreteMeasure::uniform_on(interval(c.domain, a, a + len(rng)), c.cell_mass);
    auto m1 = DiscreteMeasure::uniform_on(interval(c.domain, b, b + len(rng)), c.cell_mass);
    auto rep = cd_convexity_check(c, m0, m1, {0.25, 0.5, 0.75}, true);
    CHECK(rep.all_pass);
  }
}
