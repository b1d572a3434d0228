#include "finsler/metric_core.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace finsler {

namespace {

void require_direction(const Vec& y) {
  if (!(y.norm() > kZeroDirection)) throw Error(ErrorCode::ZeroDirection, "direction vector is (numerically) zero");
}

// Orthonormal basis of the complement of the unit vector u.
std::vector<Vec> tangent_basis(const Vec& u) {
  std::vector<Vec> basis;
  const int n = static_cast<int>(u.size());
  for (int k = 0; k < n && static_cast<int>(basis.size()) < n - 1; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = 1.0;
    e -= u.dot(e) * u;
    for (const Vec& b : basis) e -= b.dot(e) * b;
    if (e.norm() > 1e-6) basis.push_back(e.normalized());
  }
  return basis;
}

// Pattern search over unit directions (one or two of them) maximizing f.
// The objective receives unit vectors; the returned value is the best found.
double refine_directions(std::vector<Vec>& dirs, double start_step,
                         const std::function<double(const std::vector<Vec>&)>& f) {
  double best = f(dirs);
  if (dirs.front().size() < 2) return best;
  double step = start_step;
  while (step > 1e-9) {
    bool improved = false;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      for (const Vec& t : tangent_basis(dirs[d])) {
        for (double sgn : {1.0, -1.0}) {
          std::vector<Vec> trial = dirs;
          trial[d] = (dirs[d] + sgn * step * t).normalized();
          const double v = f(trial);
          if (v > best) {
            best = v;
            dirs = std::move(trial);
            improved = true;
          }
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

int default_directions(int dim) { return dim == 1 ? 2 : dim == 2 ? 360 : 800; }

Vec newton_inverse(const MetricModel& m, const Vec& x, const Vec& xi) {
  const int n = m.dim();
  Vec u = Vec::Zero(n);
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec& d : direction_grid(n, default_directions(n))) {
    const double r = xi.dot(d) / m.norm(x, d);
    if (r > best) {
      best = r;
      u = d;
    }
  }
  Vec y = best * u / m.norm(x, u);
  if (n == 1) return y;  // the 1-d maximizer is exact

  auto phi = [&](const Vec& v) {
    const double f = m.norm(x, v);
    return xi.dot(v) - 0.5 * f * f;
  };
  const double scale = xi.norm();
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const Vec r = xi - legendre(m, x, y);
    resid = r.norm();
    if (resid <= 1e-14 * scale) return y;
    const FundamentalTensor ft = fundamental_tensor(m, x, y);
    const Vec dy = ft.g_inv * r;
    const double p0 = phi(y);
    double t = 1.0;
    while (t > 1e-12 && phi(y + t * dy) < p0 - 1e-15 * std::abs(p0)) t *= 0.5;
    if (t <= 1e-12) break;
    y += t * dy;
  }
  // Finite-difference families stall at their derivative noise floor.
  if (resid <= 1e-7 * scale) return y;
  throw Error(ErrorCode::NewtonDivergence,
              "inverse Legendre iteration stalled with residual " + std::to_string(resid / scale));
}

}  // namespace

std::vector<Vec> direction_grid(int dim, int count) {
  std::vector<Vec> dirs;
  if (dim == 1) {
    dirs.push_back(make_vec({1.0}));
    dirs.push_back(make_vec({-1.0}));
  } else if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * k / count;
      dirs.push_back(make_vec({std::cos(th), std::sin(th)}));
    }
  } else {
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      dirs.push_back(make_vec({r * std::cos(ga * k), r * std::sin(ga * k), z}));
    }
  }
  return dirs;
}

FundamentalTensor fundamental_tensor(const MetricModel& m, const Vec& x, const Vec& y) {
  require_direction(y);
  const int n = m.dim();
  FundamentalTensor ft{x, y, Mat(n, n), Mat(n, n)};
  if (auto q = m.quadratic_linear(x)) {
    const Vec ay = q->A * y;
    const double a = std::sqrt(y.dot(ay));
    const double f = a + q->b.dot(y);
    const Vec grad = ay / a + q->b;
    const Mat hess = (q->A - ay * ay.transpose() / (a * a)) / a;
    ft.g = f * hess + grad * grad.transpose();
  } else {
    const Jet j = m.norm_sq_jet(x, y, false);
    ft.g = 0.5 * j.h;
  }
  ft.g = 0.5 * (ft.g + ft.g.transpose()).eval();
  Eigen::LLT<Mat> llt(ft.g);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "fundamental tensor is not positive definite");
  ft.g_inv = llt.solve(Mat::Identity(n, n));
  return ft;
}

Vec legendre(const MetricModel& m, const Vec& x, const Vec& y) {
  if (!(y.norm() > kZeroDirection)) return Vec::Zero(m.dim());
  if (auto q = m.quadratic_linear(x)) {
    const Vec ay = q->A * y;
    const double a = std::sqrt(y.dot(ay));
    return (a + q->b.dot(y)) * (ay / a + q->b);
  }
  return 0.5 * m.norm_sq_jet(x, y, false).g;
}

QuadLinear dual_quadratic_linear(const QuadLinear& q) {
  const int n = static_cast<int>(q.b.size());
  const Eigen::LLT<Mat> llt(q.A);
  const Mat ainv = llt.solve(Mat::Identity(n, n));
  const Vec bs = ainv * q.b;
  const double s = q.b.dot(bs);
  const double c = 1.0 - s;
  return QuadLinear{(c * ainv + bs * bs.transpose()) / (c * c), -bs / c};
}

Vec legendre_inverse(const MetricModel& m, const Vec& x, const Vec& xi) {
  if (!(xi.norm() > kZeroDirection)) return Vec::Zero(m.dim());
  if (auto q = m.quadratic_linear(x)) {
    const QuadLinear d = dual_quadratic_linear(*q);
    const Vec axi = d.A * xi;
    const double a = std::sqrt(xi.dot(axi));
    return (a + d.b.dot(xi)) * (axi / a + d.b);
  }
  return newton_inverse(m, x, xi);
}

double dual_norm(const MetricModel& m, const Vec& x, const Vec& xi) {
  if (!(xi.norm() > kZeroDirection)) return 0.0;
  if (auto q = m.quadratic_linear(x)) return dual_quadratic_linear(*q)(xi);
  if (m.dim() == 1) {
    const Vec p = make_vec({1.0}), n = make_vec({-1.0});
    return std::max(xi[0] / m.norm(x, p), -xi[0] / m.norm(x, n));
  }
  try {
    const Vec y = newton_inverse(m, x, xi);
    return std::sqrt(std::max(0.0, xi.dot(y)));
  } catch (const Error& e) {
    throw Error(ErrorCode::NonConvergence, std::string("dual norm refinement failed: ") + e.what());
  }
}

Mat dual_fundamental_tensor(const MetricModel& m, const Vec& x, const Vec& xi) {
  require_direction(xi);
  return fundamental_tensor(m, x, legendre_inverse(m, x, xi)).g_inv;
}

ReversibilityResult reversibility_constant(const MetricModel& m, const std::vector<Vec>& points, int directions) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "reversibility needs at least one base point");
  ReversibilityResult res;
  res.value = 0.0;
  if (m.reversible()) {
    res.value = 1.0;
    res.witness = {points.front(), direction_grid(m.dim(), 4).front(), Vec()};
    return res;
  }
  const int count = directions > 0 ? directions : default_directions(m.dim());
  const auto dirs = direction_grid(m.dim(), count);
  constexpr double kOverflow = 1e15;
  for (const Vec& x : points) {
    double best = -1.0;
    Vec bu;
    for (const Vec& u : dirs) {
      const double back = m.norm(x, -u);
      if (!(back > m.norm(x, u) / kOverflow)) {
        res.infinite = true;
        res.value = std::numeric_limits<double>::infinity();
        res.witness = {x, u, Vec()};
        return res;
      }
      const double r = m.norm(x, u) / back;
      if (r > best) {
        best = r;
        bu = u;
      }
    }
    std::vector<Vec> d{bu};
    best = refine_directions(d, 2.0 * std::numbers::pi / count,
                             [&](const std::vector<Vec>& v) { return m.norm(x, v[0]) / m.norm(x, -v[0]); });
    if (best > res.value) {
      res.value = best;
      res.witness = {x, d[0], Vec()};
    }
  }
  res.value = std::max(res.value, 1.0);
  return res;
}

UniformityConstants uniformity_constants(const MetricModel& m, const std::vector<Vec>& points, int directions) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "uniformity constants need at least one base point");
  const int n = m.dim();
  const int count = directions > 0 ? directions : (n == 1 ? 2 : n == 2 ? 100 : 200);
  const auto dirs = direction_grid(n, count);

  UniformityConstants uc;
  uc.kappa = -std::numeric_limits<double>::infinity();
  uc.kappa_star = std::numeric_limits<double>::infinity();

  auto ratio = [&](const Vec& x, const Vec& v, const Vec& w) {
    const Mat g = fundamental_tensor(m, x, v).g;
    const double f = m.norm(x, w);
    return w.dot(g * w) / (f * f);
  };

  long valid = 0;
  for (const Vec& x : points) {
    std::vector<double> fw(dirs.size());
    for (std::size_t j = 0; j < dirs.size(); ++j) fw[j] = m.norm(x, dirs[j]);
    double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
    std::size_t hv = 0, hw = 0, lv = 0, lw = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const Mat g = fundamental_tensor(m, x, dirs[i]).g;
      for (std::size_t j = 0; j < dirs.size(); ++j) {
        if (!(fw[j] > 0.0)) continue;
        const double r = dirs[j].dot(g * dirs[j]) / (fw[j] * fw[j]);
        ++valid;
        if (r > hi) {
          hi = r;
          hv = i;
          hw = j;
        }
        if (r < lo) {
          lo = r;
          lv = i;
          lw = j;
        }
      }
    }
    ++uc.samples;
    const double step = n == 1 ? 0.0 : 2.0 * std::numbers::pi / count;
    std::vector<Vec> up{dirs[hv], dirs[hw]};
    hi = refine_directions(up, step, [&](const std::vector<Vec>& d) { return ratio(x, d[0], d[1]); });
    std::vector<Vec> down{dirs[lv], dirs[lw]};
    lo = -refine_directions(down, step, [&](const std::vector<Vec>& d) { return -ratio(x, d[0], d[1]); });
    if (hi > uc.kappa) {
      uc.kappa = hi;
      uc.kappa_witness = {x, up[0], up[1]};
    }
    if (lo < uc.kappa_star) {
      uc.kappa_star = lo;
      uc.kappa_star_witness = {x, down[0], down[1]};
    }
  }
  if (valid == 0) throw Error(ErrorCode::DegenerateSample, "every sampled direction collapsed");
  uc.samples = valid;
  // Rounding can push the Riemannian ratios a hair across 1.
  uc.kappa = std::max(uc.kappa, 1.0);
  uc.kappa_star = std::min(uc.kappa_star, 1.0);

  const ReversibilityResult rev = reversibility_constant(m, points);
  uc.lambda_F = rev.value;
  uc.lambda_infinite = rev.infinite;
  uc.lambda_witness = rev.witness;
  return uc;
}

}  // namespace finsler
