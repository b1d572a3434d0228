#include "finsler/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

namespace finsler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxCorners = 1 << kMaxDim;

using SpMat = Eigen::SparseMatrix<double>;
using DVec = Eigen::VectorXd;

struct Block {
  Index cells[kMaxCorners];
  double w = 0.0;
  Vec x;
  std::optional<QuadLinear> dual;  // closed-form F* where available
  Mat a_inv;                        // F*² = ξᵀ a_inv ξ on quadratic blocks
  bool quadratic = false;
};

class Blocks {
 public:
  // All blocks inside the domain, or only those touching `support`.
  Blocks(const Chart& chart, const std::vector<std::uint8_t>* support) : chart_(chart), g_(chart.domain) {
    n_ = g_.dim();
    corners_ = 1 << n_;
    for (int k = 0; k < n_; ++k) h_[k] = g_.spacing(k);
    Coord hi{};
    Index total = 1;
    for (int k = 0; k < n_; ++k) {
      hi[k] = g_.cells(k) - 1;
      total *= hi[k];
    }
    const double w0 = g_.cell_volume() / corners_;
    for (Index t = 0; t < total; ++t) {
      Coord b{};
      Index r = t;
      for (int k = 0; k < n_; ++k) {
        b[k] = static_cast<int>(r % hi[k]);
        r /= hi[k];
      }
      Block blk;
      bool touches = support == nullptr;
      for (int c = 0; c < corners_; ++c) {
        Coord cc = b;
        for (int k = 0; k < n_; ++k) cc[k] += (c >> k) & 1;
        blk.cells[c] = g_.index(cc);
        if (support && (*support)[static_cast<std::size_t>(blk.cells[c])]) touches = true;
      }
      if (!touches) continue;
      blk.x = g_.center(blk.cells[0]);
      for (int k = 0; k < n_; ++k) blk.x[k] += 0.5 * h_[k];
      const double s = chart.measure(blk.x);
      if (!(s > 0.0) || !std::isfinite(s))
        throw Error(ErrorCode::NonPositiveDensity, "density " + std::to_string(s) + " inside the domain");
      blk.w = s * w0;
      if (auto q = chart.metric->quadratic_linear(blk.x)) {
        blk.dual = dual_quadratic_linear(*q);
        blk.quadratic = q->b.isZero(0.0);
        if (blk.quadratic) blk.a_inv = q->A.inverse();
      }
      blocks_.push_back(std::move(blk));
    }
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  int corners() const { return corners_; }
  bool all_quadratic() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](const Block& b) { return b.quadratic; });
  }

  // D_c u: one-sided differences along the block edges meeting at corner c.
  Vec corner_gradient(const double* local, int c) const {
    Vec d(n_);
    for (int k = 0; k < n_; ++k) {
      const int hi = c | (1 << k), lo = c & ~(1 << k);
      d[k] = (local[hi] - local[lo]) / h_[k];
    }
    return d;
  }

  double dual(const Block& b, const Vec& xi) const {
    if (b.dual) return (*b.dual)(xi);
    return dual_norm(*chart_.metric, b.x, xi);
  }

  // ½ ∂F*²/∂ξ.
  Vec dual_legendre(const Block& b, const Vec& xi) const {
    if (xi.norm() < kZeroDirection) return Vec::Zero(n_);
    if (b.dual) {
      const Vec ax = b.dual->A * xi;
      const double alpha = std::sqrt(xi.dot(ax));
      if (!(alpha > 0.0)) return Vec::Zero(n_);
      return (*b.dual)(xi) * (ax / alpha + b.dual->b);
    }
    return legendre_inverse(*chart_.metric, b.x, xi);
  }

  void load(const Block& b, const std::vector<double>& u, double* local) const {
    for (int c = 0; c < corners_; ++c) local[c] = u[static_cast<std::size_t>(b.cells[c])];
  }

  double energy(const std::vector<double>& u) const {
    double e = 0.0;
    double local[kMaxCorners];
    for (const Block& b : blocks_) {
      load(b, u, local);
      double s = 0.0;
      for (int c = 0; c < corners_; ++c) {
        const Vec xi = corner_gradient(local, c);
        if (xi.isZero(0.0)) continue;
        const double f = dual(b, xi);
        s += f * f;
      }
      e += b.w * s;
    }
    return e;
  }

  // ∂E/∂u on the full grid.
  std::vector<double> energy_gradient(const std::vector<double>& u) const {
    std::vector<double> grad(u.size(), 0.0);
    double local[kMaxCorners];
    for (const Block& b : blocks_) {
      load(b, u, local);
      for (int c = 0; c < corners_; ++c) {
        const Vec xi = corner_gradient(local, c);
        const Vec l = 2.0 * b.w * dual_legendre(b, xi);
        for (int k = 0; k < n_; ++k) {
          const int hi = c | (1 << k), lo = c & ~(1 << k);
          grad[static_cast<std::size_t>(b.cells[hi])] += l[k] / h_[k];
          grad[static_cast<std::size_t>(b.cells[lo])] -= l[k] / h_[k];
        }
      }
    }
    return grad;
  }

  double dual_integral(const std::vector<double>& f) const {
    double s = 0.0;
    double local[kMaxCorners];
    for (const Block& b : blocks_) {
      load(b, f, local);
      double t = 0.0;
      for (int c = 0; c < corners_; ++c) {
        const Vec xi = -corner_gradient(local, c);
        if (!xi.isZero(0.0)) t += dual(b, xi);
      }
      s += b.w * t;
    }
    return s;
  }

  // Stiffness of the quadratic energy (or of the quadratic part of the dual
  // norm, as a preconditioner) over the unknowns.
  SpMat stiffness(const std::vector<Index>& unknown_of, Index count, bool surrogate) const {
    std::vector<Eigen::Triplet<double>> trip;
    for (const Block& b : blocks_) {
      Mat q;
      if (b.quadratic)
        q = b.a_inv;
      else if (surrogate && b.dual)
        q = b.dual->A;
      else
        q = Mat::Identity(n_, n_);
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxCorners, kMaxCorners> kb =
          Eigen::MatrixXd::Zero(corners_, corners_);
      for (int c = 0; c < corners_; ++c) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxCorners> gc =
            Eigen::MatrixXd::Zero(n_, corners_);
        for (int k = 0; k < n_; ++k) {
          gc(k, c | (1 << k)) += 1.0 / h_[k];
          gc(k, c & ~(1 << k)) -= 1.0 / h_[k];
        }
        kb += gc.transpose() * q * gc;
      }
      kb *= b.w;
      for (int i = 0; i < corners_; ++i) {
        const Index ui = unknown_of[static_cast<std::size_t>(b.cells[i])];
        if (ui < 0) continue;
        for (int j = 0; j < corners_; ++j) {
          const Index uj = unknown_of[static_cast<std::size_t>(b.cells[j])];
          if (uj >= 0 && kb(i, j) != 0.0) trip.emplace_back(ui, uj, kb(i, j));
        }
      }
    }
    SpMat k(count, count);
    k.setFromTriplets(trip.begin(), trip.end());
    return k;
  }

 private:
  const Chart& chart_;
  const GridDomain& g_;
  int n_ = 0;
  int corners_ = 0;
  double h_[kMaxDim] = {};
  std::vector<Block> blocks_;
};

struct Problem {
  std::vector<Index> cells;      // unknown → cell
  std::vector<Index> unknown_of;  // cell → unknown or -1
  DVec mass;                     // diagonal mass matrix
};

Problem make_problem(const Chart& chart, const BorelMask& omega) {
  const GridDomain& g = chart.domain;
  Problem p;
  p.unknown_of.assign(static_cast<std::size_t>(g.size()), -1);
  for (Index i = 0; i < g.size(); ++i)
    if (omega[i] && !g.on_boundary(i)) {
      p.unknown_of[static_cast<std::size_t>(i)] = static_cast<Index>(p.cells.size());
      p.cells.push_back(i);
    }
  if (p.cells.empty()) throw Error(ErrorCode::EmptyInterior, "the domain mask has no interior cells");
  p.mass.resize(static_cast<Eigen::Index>(p.cells.size()));
  for (std::size_t k = 0; k < p.cells.size(); ++k)
    p.mass[static_cast<Eigen::Index>(k)] = chart.cell_mass[static_cast<std::size_t>(p.cells[k])];
  return p;
}

std::vector<double> scatter(const Problem& p, const DVec& v, Index size) {
  std::vector<double> u(static_cast<std::size_t>(size), 0.0);
  for (std::size_t k = 0; k < p.cells.size(); ++k)
    u[static_cast<std::size_t>(p.cells[k])] = v[static_cast<Eigen::Index>(k)];
  return u;
}

DVec gather(const Problem& p, const std::vector<double>& u) {
  DVec v(static_cast<Eigen::Index>(p.cells.size()));
  for (std::size_t k = 0; k < p.cells.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = u[static_cast<std::size_t>(p.cells[k])];
  return v;
}

// Deterministic sign: positive total.
void orient(DVec& v) {
  if (v.sum() < 0.0) v = -v;
}

// Smallest generalized eigenpair of K v = λ M v by inverse subspace
// iteration with Rayleigh-Ritz.
std::pair<double, DVec> smallest_eigenpair(const SpMat& k, const DVec& mass, const EigenOptions& opts,
                                           std::vector<double>* trace, bool* converged) {
  const Eigen::Index n = k.rows();
  const Eigen::Index p = std::min<Eigen::Index>(4, n);
  Eigen::SimplicialLDLT<SpMat> ldlt(k);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "stiffness factorization failed");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = unif(rng);
  double lambda = kInf;
  DVec best;
  *converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::MatrixXd y(n, p);
    for (Eigen::Index j = 0; j < p; ++j) y.col(j) = ldlt.solve(mass.cwiseProduct(x.col(j)));
    const Eigen::MatrixXd ky = k * y;
    const Eigen::MatrixXd kr = y.transpose() * ky;
    const Eigen::MatrixXd mr = y.transpose() * mass.asDiagonal() * y;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (kr + kr.transpose()),
                                                                 0.5 * (mr + mr.transpose()));
    x = y * es.eigenvectors();
    for (Eigen::Index j = 0; j < p; ++j) x.col(j) /= std::sqrt(x.col(j).dot(mass.cwiseProduct(x.col(j))));
    const double next = es.eigenvalues()[0];
    if (trace) trace->push_back(next);
    const bool done = std::abs(next - lambda) <= 1e-12 * std::abs(next);
    lambda = next;
    if (done) {
      *converged = true;
      break;
    }
  }
  best = x.col(0);
  orient(best);
  return {lambda, best};
}

RayleighReport finish_report(const Chart& chart, const Blocks& blocks, const Problem& p, const DVec& v,
                             std::vector<double> trace, bool converged, const char* path) {
  RayleighReport r;
  r.u = ScalarField(chart.domain);
  r.u.values = scatter(p, v, chart.domain.size());
  r.energy = blocks.energy(r.u.values);
  r.mass = v.dot(p.mass.cwiseProduct(v));
  r.lambda = r.energy / r.mass;
  r.trace = std::move(trace);
  r.converged = converged;
  r.path = path;
  return r;
}

// Preconditioned descent on the Rayleigh quotient from u0 (unit mass).
double descend(const Blocks& blocks, const Problem& p, const Eigen::SimplicialLDLT<SpMat>& pre, Index size, DVec& u,
               const EigenOptions& opts, std::vector<double>& trace, bool* converged) {
  auto quotient = [&](const DVec& v) {
    return blocks.energy(scatter(p, v, size)) / v.dot(p.mass.cwiseProduct(v));
  };
  u /= std::sqrt(u.dot(p.mass.cwiseProduct(u)));
  double lambda = quotient(u);
  double alpha = 1.0;
  *converged = false;
  std::vector<double> hist{lambda};
  for (int it = 0; it < opts.max_iterations; ++it) {
    const DVec grad = gather(p, blocks.energy_gradient(scatter(p, u, size))) - 2.0 * lambda * p.mass.cwiseProduct(u);
    const DVec d = -pre.solve(grad);
    const double slope = grad.dot(d);
    if (!(slope < 0.0)) {
      *converged = true;
      break;
    }
    alpha = std::min(1.0, 4.0 * alpha);
    double next = kInf;
    DVec trial;
    for (int bt = 0; bt < 50; ++bt) {
      trial = u + alpha * d;
      next = quotient(trial);
      if (next <= lambda + 1e-4 * alpha * slope) break;
      alpha *= 0.5;
    }
    if (!(next < lambda)) {
      *converged = true;
      break;
    }
    u = trial / std::sqrt(trial.dot(p.mass.cwiseProduct(trial)));
    lambda = next;
    trace.push_back(lambda);
    hist.push_back(lambda);
    if (hist.size() > 10 && std::abs(hist[hist.size() - 11] - lambda) <= opts.tolerance * lambda) {
      *converged = true;
      break;
    }
  }
  return lambda;
}

}  // namespace

double dirichlet_energy(const Chart& chart, const ScalarField& u) {
  if (!(u.domain == chart.domain)) throw Error(ErrorCode::InvalidArgument, "field belongs to another domain");
  return Blocks(chart, nullptr).energy(u.values);
}

double field_mass(const Chart& chart, const ScalarField& u) {
  if (!(u.domain == chart.domain)) throw Error(ErrorCode::InvalidArgument, "field belongs to another domain");
  double m = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) m += u.values[i] * u.values[i] * chart.cell_mass[i];
  return m;
}

double rayleigh_quotient(const Chart& chart, const ScalarField& u) {
  const double m = field_mass(chart, u);
  if (!(m > 0.0)) throw Error(ErrorCode::EmptyInput, "Rayleigh quotient of the zero field");
  return dirichlet_energy(chart, u) / m;
}

RayleighReport first_eigenvalue_domain(const Chart& chart, const BorelMask& omega, const EigenOptions& opts) {
  if (!(omega.domain == chart.domain)) throw Error(ErrorCode::InvalidArgument, "mask belongs to another domain");
  const Problem p = make_problem(chart, omega);
  std::vector<std::uint8_t> support(static_cast<std::size_t>(chart.domain.size()), 0);
  for (Index c : p.cells) support[static_cast<std::size_t>(c)] = 1;
  const Blocks blocks(chart, &support);
  const Index n = static_cast<Index>(p.cells.size());
  const Index size = chart.domain.size();

  std::vector<double> trace;
  bool converged = false;
  if (blocks.all_quadratic() && !opts.force_general) {
    const SpMat k = blocks.stiffness(p.unknown_of, n, false);
    auto [lambda, v] = smallest_eigenpair(k, p.mass, opts, &trace, &converged);
    return finish_report(chart, blocks, p, v, std::move(trace), converged, "linear");
  }

  // Surrogate quadratic energy: minimizer as first start, factor as
  // preconditioner.
  const SpMat k0 = blocks.stiffness(p.unknown_of, n, true);
  std::vector<double> ignored;
  bool ok0 = false;
  auto [l0, v0] = smallest_eigenpair(k0, p.mass, opts, &ignored, &ok0);
  Eigen::SimplicialLDLT<SpMat> pre(k0);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double best = kInf;
  DVec best_u;
  bool best_conv = false;
  const int starts = std::max(1, opts.restarts);
  for (int s = 0; s < starts; ++s) {
    DVec u = v0;
    if (s > 0)
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] *= 0.5 + unif(rng);
    std::vector<double> tr;
    bool conv = false;
    const double l = descend(blocks, p, pre, size, u, opts, tr, &conv);
    if (l < best) {
      best = l;
      best_u = u;
      best_conv = conv;
      trace = std::move(tr);
    }
  }
  orient(best_u);
  return finish_report(chart, blocks, p, best_u, std::move(trace), best_conv, "descent");
}

std::pair<double, double> fit_inverse_square(const std::vector<double>& radii, const std::vector<double>& lambdas) {
  if (radii.size() != lambdas.size() || radii.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "inverse-square fit needs at least two radii");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = 1.0 / (radii[i] * radii[i]);
    sx += x;
    sy += lambdas[i];
    sxx += x * x;
    sxy += x * lambdas[i];
  }
  const double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - a * sx) / n, a};
}

ExhaustionReport first_eigenvalue_exhaustion(const Chart& chart, const Vec& x0, const std::vector<double>& radii,
                                             const EigenOptions& opts, bool strict) {
  if (radii.empty()) throw Error(ErrorCode::InvalidArgument, "empty radius schedule");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw Error(ErrorCode::InvalidArgument, "radius schedule must be positive and increasing");
  const GridDomain& g = chart.domain;
  DistanceOptions dopts;
  dopts.cutoff = radii.back() + 4.0 * g.max_spacing() * 4.0;
  const DistanceField f = distance_from_point(chart.metric, g, x0, Direction::Forward, dopts);
  ExhaustionReport rep;
  rep.radii = radii;
  rep.unit_ball_mass = mass_below(f, chart.cell_mass, 1.0);
  for (double R : radii) {
    const BorelMask ball = forward_ball(f, R);
    if (ball.touches_boundary())
      throw Error(ErrorCode::TouchesBoundary, "ball of radius " + std::to_string(R) + " reaches the domain boundary");
    const RayleighReport r = first_eigenvalue_domain(chart, ball, opts);
    rep.lambdas.push_back(r.lambda);
    rep.converged.push_back(r.converged);
    rep.ball_mass.push_back(mass_below(f, chart.cell_mass, R));
    rep.half_ball_mass.push_back(mass_below(f, chart.cell_mass, 0.5 * R));
  }
  for (std::size_t i = 1; i < rep.lambdas.size(); ++i) {
    const double inc = (rep.lambdas[i] - rep.lambdas[i - 1]) / rep.lambdas[i - 1];
    rep.worst_increase = std::max(rep.worst_increase, inc);
    if (inc > 1e-3) rep.monotone = false;
  }
  if (rep.lambdas.size() >= 2) {
    rep.limit = fit_inverse_square(rep.radii, rep.lambdas).first;
    if (rep.lambdas.size() >= 3) {
      // Model uncertainty: the fit on the last two radii and the fit with an
      // extra 1/R³ term.
      const std::vector<double> r2(rep.radii.end() - 2, rep.radii.end()), l2(rep.lambdas.end() - 2, rep.lambdas.end());
      const std::size_t n = rep.radii.size();
      Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
      DVec b(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const double x = 1.0 / rep.radii[i];
        a.row(static_cast<Eigen::Index>(i)) << 1.0, x * x, x * x * x;
        b[static_cast<Eigen::Index>(i)] = rep.lambdas[i];
      }
      const double cubic = a.colPivHouseholderQr().solve(b)[0];
      rep.limit_error =
          std::max(std::abs(fit_inverse_square(r2, l2).first - rep.limit), std::abs(cubic - rep.limit));
    }
  } else {
    rep.limit = rep.lambdas.front();
  }
  if (strict && !rep.monotone) {
    std::ostringstream os;
    os << "λ₁ increases by " << rep.worst_increase << " (relative) along the radius schedule";
    throw Error(ErrorCode::MonotonicityViolation, os.str());
  }
  return rep;
}

double dual_gradient_integral(const Chart& chart, const ScalarField& f) {
  if (!(f.domain == chart.domain)) throw Error(ErrorCode::InvalidArgument, "field belongs to another domain");
  return Blocks(chart, nullptr).dual_integral(f.values);
}

CoareaReport coarea_check(const Chart& chart, const ScalarField& f, int levels) {
  if (!(f.domain == chart.domain)) throw Error(ErrorCode::InvalidArgument, "field belongs to another domain");
  if (levels < 2 || levels % 2) throw Error(ErrorCode::InvalidArgument, "co-area quadrature needs an even level count");
  const GridDomain& g = chart.domain;
  double fmax = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorCode::InvalidArgument, "co-area check needs f >= 0");
    fmax = std::max(fmax, f[i]);
  }
  if (!(fmax > 0.0)) throw Error(ErrorCode::EmptyInput, "co-area check of the zero field");

  CoareaReport rep;
  rep.levels = levels;
  // Levels t = fmax·φ(s) on a uniform s grid, φ the quintic smoothstep. It
  // flattens the t^{1/p} onset of the content where f leaves zero like a
  // p-th power, and the square-root tail near a maximum.
  auto phi = [](double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); };
  auto dphi = [](double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); };
  const double ds = 1.0 / levels;
  std::vector<double> c(static_cast<std::size_t>(levels + 1), 0.0), e(c.size(), 0.0);
  for (int k = 1; k < levels; ++k) {
    const double t = fmax * phi(k * ds);
    BorelMask s(g);
    for (Index i = 0; i < g.size(); ++i)
      if (f[i] >= t) s.set(i);
    if (s.empty()) {
      ++rep.vanished_levels;
      continue;
    }
    try {
      const ContentEstimate ce = minkowski_content(chart, s);
      const double w = fmax * dphi(k * ds);
      c[static_cast<std::size_t>(k)] = ce.value * w;
      e[static_cast<std::size_t>(k)] = ce.error_bar * w;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::EmptyInput) throw;
      ++rep.vanished_levels;
    }
  }
  // φ' vanishes at both ends, so the end nodes carry no weight.
  auto trapezoid = [&](const std::vector<double>& v, int stride) {
    double sum = 0.0;
    for (int k = stride; k < levels; k += stride) sum += v[static_cast<std::size_t>(k)];
    return sum * ds * stride;
  };
  rep.lhs = trapezoid(c, 1);
  rep.quadrature_error = std::abs(rep.lhs - trapezoid(c, 2)) / 3.0;
  rep.content_error = trapezoid(e, 1);
  rep.rhs = dual_gradient_integral(chart, f);
  rep.slack = rep.quadrature_error + rep.content_error;
  rep.pass = rep.lhs <= rep.rhs + rep.slack;
  return rep;
}

CheegerBuserReport cheeger_buser_check(const CheegerBuserInput& in) {
  CheegerBuserReport r;
  const ExhaustionReport& ex = in.exhaustion;
  const double kappa = in.constants.kappa;
  const double lam_F = in.constants.lambda_F;
  const double ve = in.entropy.value, ve_err = in.entropy.error_bar;
  r.lambda = ex.limit;
  r.lambda_slack = ex.limit_error + in.solver_tolerance * std::abs(ex.limit);

  r.upper = 0.25 * kappa * kappa * ve * ve;
  r.upper_slack = 0.5 * kappa * kappa * std::abs(ve) * ve_err;
  r.upper_pass = r.lambda - r.lambda_slack <= r.upper + r.upper_slack;

  r.lower_available = in.certified && !in.constants.lambda_infinite;
  if (r.lower_available) {
    r.lower_lambda_form = ve * ve / (4.0 * lam_F * lam_F);
    r.lower_kappa_form = ve * ve / (4.0 * kappa * kappa);
    r.lower_slack = 0.5 * std::abs(ve) * ve_err / (lam_F * lam_F);
    r.lower_lambda_pass = r.lambda + r.lambda_slack >= r.lower_lambda_form - r.lower_slack;
    r.lower_kappa_pass = r.lambda + r.lambda_slack >= r.lower_kappa_form - r.lower_slack;
    r.closure = (r.upper - r.lower_lambda_form) / r.lambda;
  }

  // Finite-radius form of the upper bound: λ₁(B⁺_{2R}) at R = r/2 for every
  // scheduled radius r with R > 2.
  const double kt = 1.0 / in.constants.kappa_star;
  bool inter_ok = true;
  for (double delta : in.deltas) {
    for (std::size_t i = 0; i < ex.radii.size(); ++i) {
      const double R = 0.5 * ex.radii[i];
      if (!(R > 2.0) || !(kappa - delta * delta > 0.0)) continue;
      IntermediateBound b;
      b.delta = delta;
      b.R = R;
      b.lambda_2R = ex.lambdas[i];
      const double paren = std::log(ex.half_ball_mass[i] / ex.unit_ball_mass) + delta / (2.0 * kappa) +
                           std::log(8.0 * kappa * (2.0 * kappa * kt + delta) / (kappa - delta * delta));
      b.bound = kappa * kappa / (4.0 * delta * delta * (R - 1.0) * (R - 1.0)) * paren * paren;
      b.pass = b.lambda_2R <= b.bound * (1.0 + in.solver_tolerance);
      inter_ok = inter_ok && b.pass;
      r.intermediate.push_back(b);
    }
  }
  r.all_pass = r.upper_pass && r.lower_lambda_pass && r.lower_kappa_pass && inter_ok;
  return r;
}

}  // namespace finsler
