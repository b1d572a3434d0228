#include "finsler/geometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace finsler;

namespace {

BorelMask box_mask(const GridDomain& g, const Vec& lo, const Vec& hi) {
  BorelMask m(g);
  for (Index i = 0; i < g.size(); ++i) {
    Vec x = g.center(i);
    bool in = true;
    for (int k = 0; k < g.dim(); ++k) in = in && x[k] > lo[k] && x[k] < hi[k];
    if (in) m.set(i);
  }
  return m;
}

BorelMask disk_mask(const GridDomain& g, const Vec& c, double r) {
  BorelMask m(g);
  for (Index i = 0; i < g.size(); ++i)
    if ((g.center(i) - c).norm() < r) m.set(i);
  return m;
}

Chart exp_line(double lo, double hi, int cells) {
  return Chart::make(make_euclidean(1), MeasureDensity::expression(1, "exp(x1)"), GridDomain({lo}, {hi}, {cells}));
}

Chart flat2(double half, int cells) {
  return Chart::make(make_euclidean(2), MeasureDensity::lebesgue(2), GridDomain({-half, -half}, {half, half}, {cells, cells}));
}

}  // namespace

TEST_CASE("content of [0, 2] under e^x dx is e^2 + 1") {
  Chart c = exp_line(-3, 5, 1600);
  auto e = box_mask(c.domain, make_vec({0}), make_vec({2}));
  auto ce = minkowski_content(c, e);
  CHECK(ce.value == doctest::Approx(std::exp(2.0) + 1.0).epsilon(0.05));
  CHECK(ce.mass == doctest::Approx(std::exp(2.0) - 1.0).epsilon(0.01));
}

TEST_CASE("content of a Euclidean disk matches d/dr of the ball mass") {
  Chart c = flat2(3, 120);
  Vec x0 = make_vec({0.025, 0.025});
  double r = 1.5;
  auto ce = minkowski_content(c, disk_mask(c.domain, x0, r));
  // quadrature derivative of r ↦ m(B_r) from the point-source field
  auto f = distance_from_point(c.metric, c.domain, x0);
  double dr = 0.1;
  double deriv = (mass_below(f, c.cell_mass, r + dr) - mass_below(f, c.cell_mass, r - dr)) / (2 * dr);
  CHECK(ce.value == doctest::Approx(deriv).epsilon(0.05));
  CHECK(ce.value == doctest::Approx(2 * M_PI * r).epsilon(0.05));
}

TEST_CASE("content of rotated squares is the perimeter within 5%") {
  Chart c = flat2(5, 200);
  for (double deg : {0.0, 22.5, 45.0}) {
    double th = deg * M_PI / 180, ux = std::cos(th), uy = std::sin(th);
    BorelMask b(c.domain);
    for (Index i = 0; i < c.domain.size(); ++i) {
      Vec x = c.domain.center(i);
      if (std::abs(x[0] * ux + x[1] * uy) < 3 && std::abs(-x[0] * uy + x[1] * ux) < 3) b.set(i);
    }
    INFO(deg);
    CHECK(minkowski_content(c, b).value == doctest::Approx(24.0).epsilon(0.05));
  }
}

TEST_CASE("volume entropy of the weighted line e^x dx is 1") {
  Chart c = exp_line(-36, 36, 7200);
  auto ve = volume_entropy(c, make_vec({0}), 10, 30);
  CHECK(ve.value == doctest::Approx(1.0).epsilon(0.02));
  CHECK(ve.residual < 0.05);
}

TEST_CASE("volume entropy of the 1-d Randers line is 1/F(+1) = 2/3") {
  // forward ball of radius R is (-R/F(-1), R/F(+1)) = (-2R, 2R/3)
  Chart c = Chart::make(make_randers(Mat::Identity(1, 1), make_vec({0.5})), MeasureDensity::expression(1, "exp(x1)"),
                        GridDomain({-65}, {25}, {9000}));
  auto ve = volume_entropy(c, make_vec({0}), 10, 30);
  CHECK(ve.value == doctest::Approx(2.0 / 3.0).epsilon(0.02));
}

TEST_CASE("window outside the domain is refused") {
  Chart c = exp_line(-5, 5, 100);
  try {
    volume_entropy(c, make_vec({0}), 2, 30);
    FAIL("expected WindowOutsideDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WindowOutsideDomain);
  }
}

TEST_CASE("second Cheeger bracket on e^x dx closes on [1, 1 + 0.05] with long intervals") {
  Chart c = exp_line(-12, 12, 2400);
  std::vector<CandidateSet> cands;
  for (double L : {2.0, 4.0, 6.0, 8.0})
    cands.push_back({"interval L=" + std::to_string(L), box_mask(c.domain, make_vec({-L / 2}), make_vec({L / 2}))});
  auto br = second_cheeger_bracket(c, cands, 1.0, true);
  CHECK(br.lower == 1.0);
  CHECK(br.upper >= 1.0);
  // oracle ratio (e^L + 1)/(e^L − 1) → 1
  CHECK(br.upper - br.lower < 0.05);
  CHECK(br.lower_certified);
}

TEST_CASE("second Cheeger bracket on the Euclidean plane decays like n/r") {
  Chart c = flat2(6, 240);
  std::vector<CandidateSet> cands;
  for (double r : {1.0, 2.0, 4.0}) cands.push_back({"disk", disk_mask(c.domain, make_vec({0.025, 0.025}), r)});
  auto br = second_cheeger_bracket(c, cands, 0.0, true);
  CHECK(br.lower == 0.0);
  CHECK(br.upper == doctest::Approx(2.0 / 4.0).epsilon(0.07));
}

TEST_CASE("diameter of [0, 1] under Randers b = 0.5 is F(+1) = 1.5") {
  Chart c = Chart::make(make_randers(Mat::Identity(1, 1), make_vec({0.5})), MeasureDensity::lebesgue(1),
                        GridDomain({-1}, {2}, {600}));
  auto e = box_mask(c.domain, make_vec({0}), make_vec({1}));
  CHECK(diameter(c, e) == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("Brunn-Minkowski closed case A = [0,1], B = [2,4], t = 1/2") {
  Chart c = Chart::make(make_euclidean(1), MeasureDensity::lebesgue(1), GridDomain({-2}, {6}, {800}));
  auto a = box_mask(c.domain, make_vec({0}), make_vec({1}));
  auto b = box_mask(c.domain, make_vec({2}), make_vec({4}));
  auto rows = brunn_minkowski_check(c, a, b, {0.5});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].pass);
  CHECK(rows[0].rhs == doctest::Approx(0.5 * std::log(2.0)).epsilon(0.01));
  // Z_{1/2} = [1, 2.5] plus the declared one-cell dilation on each side
  double h = c.domain.spacing(0);
  CHECK(std::exp(rows[0].log_mass_z) == doctest::Approx(1.5 + 2 * h).epsilon(0.01));
}

TEST_CASE("Euclidean midpoint set of convex A, B is (1-t)A + tB within 2h Hausdorff") {
  Chart c = flat2(2, 80);
  double h = c.domain.spacing(0);
  auto a = disk_mask(c.domain, make_vec({-1, 0}), 0.5);
  auto b = box_mask(c.domain, make_vec({0.5, -0.5}), make_vec({1.5, 0.5}));
  auto z = midpoint_set(c, a, b, 0.5);
  // ½A ⊕ ½B: points within 0.25 of the square [−0.25, 0.25]²
  auto oracle_dist = [](const Vec& p) {
    double dx = std::max({-0.25 - p[0], 0.0, p[0] - 0.25});
    double dy = std::max({-0.25 - p[1], 0.0, p[1] - 0.25});
    return std::max(0.0, std::hypot(dx, dy) - 0.25);
  };
  double excess = 0.0, deficit = 0.0;
  for (Index i = 0; i < c.domain.size(); ++i) {
    double d = oracle_dist(c.domain.center(i));
    if (z.mask[i]) excess = std::max(excess, d);
    if (d == 0.0 && !z.mask[i]) deficit = std::max(deficit, 1.0);
  }
  CHECK(excess <= 2 * h + 1e-12);
  CHECK(deficit == 0.0);
  CHECK(z.tolerance == doctest::Approx(2 * h));
}

TEST_CASE("midpoint set with a ball lies in the t(d + R) neighbourhood") {
  Chart c = flat2(3, 120);
  auto e = disk_mask(c.domain, make_vec({-1, 0}), 0.5);
  auto ball = disk_mask(c.domain, make_vec({1, 0}), 0.5);
  double d = 2.5, R = 0.5, t = 0.5;
  auto z = midpoint_set(c, e, ball, t);
  auto nb = forward_neighborhood(c, e, t * (d + R) + z.tolerance);
  CHECK(z.mask.subset_of(nb));
}

TEST_CASE("masks: boundary cells, dilation and run-length roundtrip") {
  GridDomain g({0, 0}, {10, 10}, {10, 10});
  auto m = box_mask(g, make_vec({2, 2}), make_vec({5, 5}));
  CHECK(m.count() == 9);
  CHECK(boundary_cells(m).size() == 8);
  CHECK(m.dilated().count() == 25);
  CHECK(m.subset_of(m.dilated()));
  auto back = BorelMask::from_rle(m.to_rle());
  CHECK(back.bits == m.bits);
  CHECK(back.domain == m.domain);
}

TEST_CASE("isoperimetric check on the weighted line: unions pass and balls are near-sharp") {
  Chart c = exp_line(-36, 36, 7200);
  auto ve = volume_entropy(c, make_vec({0}), 10, 30);
  std::vector<CandidateSet> sets{
      {"a", box_mask(c.domain, make_vec({-3}), make_vec({1}))},
      {"b", box_mask(c.domain, make_vec({2}), make_vec({2.7}))},
  };
  sets[1].mask |= box_mask(c.domain, make_vec({-6}), make_vec({-4}));
  std::vector<CandidateSet> balls{{"ball 8", box_mask(c.domain, make_vec({-8}), make_vec({8}))}};
  auto rep = isoperimetric_check(c, ve, true, sets, balls);
  CHECK(rep.all_pass);
  CHECK(rep.rows.size() == 2);
  CHECK(rep.sharpness_gap < 0.05);
}
