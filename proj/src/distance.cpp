#include "finsler/distance.hpp"

#include "finsler/metric_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <queue>

namespace finsler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Coord> build_stencil(int dim, bool primitive) {
  std::vector<Coord> out;
  const int total = dim == 1 ? 5 : dim == 2 ? 25 : 125;
  for (int k = 0; k < total; ++k) {
    Coord c{};
    int r = k;
    bool zero = true;
    int g = 0;
    for (int a = 0; a < dim; ++a) {
      c[a] = r % 5 - 2;
      r /= 5;
      if (c[a] != 0) zero = false;
      g = std::gcd(g, std::abs(c[a]));
    }
    if (zero || (primitive && g != 1)) continue;
    out.push_back(c);
  }
  if (dim == 2)
    std::sort(out.begin(), out.end(), [](const Coord& a, const Coord& b) {
      return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]);
    });
  return out;
}

// Index pairs of stencil directions that span an update simplex.
std::vector<std::vector<int>> build_partners(int dim, const std::vector<Coord>& st) {
  const int n = static_cast<int>(st.size());
  std::vector<std::vector<int>> partners(static_cast<std::size_t>(n));
  if (dim == 2) {
    for (int k = 0; k < n; ++k) {
      partners[k].push_back((k + 1) % n);
      partners[k].push_back((k + n - 1) % n);
    }
  } else if (dim == 3) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        double dot = 0, na = 0, nb = 0;
        for (int k = 0; k < 3; ++k) {
          dot += st[a][k] * st[b][k];
          na += st[a][k] * st[a][k];
          nb += st[b][k] * st[b][k];
        }
        if (dot / std::sqrt(na * nb) >= 0.891) partners[a].push_back(b);
      }
  }
  return partners;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi, double* arg, int iters = 60) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  double best = 0.5 * (a + b), fbest = f(best);
  for (double e : {lo, hi}) {
    const double fe = f(e);
    if (fe < fbest) {
      fbest = fe;
      best = e;
    }
  }
  if (arg) *arg = best;
  return fbest;
}

// Minimizing λ ↦ (1-λ)d1 + λd2 + F((1-λ)v1 + λv2) for F = √(yᵀAy) + b·y only
// needs these scalars, which constant metrics precompute per stencil pair.
struct SegmentCoeffs {
  double qa, qb, qc, bv1, bw;
};

SegmentCoeffs segment_coeffs(const QuadLinear& q, const Vec& v1, const Vec& v2) {
  const Vec w = v2 - v1;
  const Vec aw = q.A * w;
  return {w.dot(aw), 2.0 * v1.dot(aw), v1.dot(q.A * v1), q.b.dot(v1), q.b.dot(w)};
}

double segment_core(const SegmentCoeffs& k, double d1, double d2, double* lambda) {
  const double qa = k.qa, qb = k.qb, qc = k.qc;
  const double c0 = d1 + k.bv1;
  const double c1 = d2 - d1 + k.bw;
  auto f = [&](double l) { return c0 + c1 * l + std::sqrt(std::max(0.0, (qa * l + qb) * l + qc)); };
  double best = 0.0, fbest = f(0.0);
  const double f1 = f(1.0);
  if (f1 < fbest) {
    fbest = f1;
    best = 1.0;
  }
  if (qa > 0.0 && c1 * c1 < qa) {
    const double disc = std::max(0.0, 4.0 * qa * qc - qb * qb);
    const double u = -std::copysign(std::abs(c1) * std::sqrt(disc / (qa - c1 * c1)), c1);
    const double l = (u - qb) / (2.0 * qa);
    if (l > 0.0 && l < 1.0) {
      const double fl = f(l);
      if (fl < fbest) {
        fbest = fl;
        best = l;
      }
    }
  }
  if (lambda) *lambda = best;
  return fbest;
}

double ql_segment_minimum(const QuadLinear& q, double d1, double d2, const Vec& v1, const Vec& v2, double* lambda) {
  return segment_core(segment_coeffs(q, v1, v2), d1, d2, lambda);
}

class Solver {
 public:
  Solver(const MetricModel& m, const GridDomain& g, const DistanceOptions& opts)
      : m_(m), g_(g), opts_(opts), st_(stencil(g.dim())) {
    static thread_local std::vector<std::vector<int>> cache[kMaxDim + 1];
    auto& p = cache[g.dim()];
    if (p.empty()) p = build_partners(g.dim(), st_);
    partners_ = &p;
    for (const Coord& s : st_) disp_.push_back(displacement(s));
    if (m_.x_independent()) {
      constant_ = m_.quadratic_linear(Vec::Zero(g.dim()));
      const Vec origin = Vec::Zero(g.dim());
      for (const Vec& v : disp_) edge_cost_.push_back(constant_ ? (*constant_)(v) : m_.norm(origin, v));
      if (constant_)
        for (std::size_t k = 0; k < st_.size(); ++k) {
          coeffs_.emplace_back();
          for (int kk : (*partners_)[k]) coeffs_.back().push_back(segment_coeffs(*constant_, disp_[k], disp_[kk]));
        }
    }
    d_.assign(static_cast<std::size_t>(g.size()), kInf);
    pred_.assign(static_cast<std::size_t>(g.size()), -1);
    state_.assign(static_cast<std::size_t>(g.size()), 0);
  }

  Vec displacement(const Coord& s) const {
    Vec v(g_.dim());
    for (int k = 0; k < g_.dim(); ++k) v[k] = s[k] * g_.spacing(k);
    return v;
  }

  double norm_at(const Vec& x, const Vec& v) const {
    if (constant_) return (*constant_)(v);
    return m_.norm(x, v);
  }

  double segment(const Vec& x, double d1, double d2, const Vec& v1, const Vec& v2, double* lambda) const {
    if (constant_) return ql_segment_minimum(*constant_, d1, d2, v1, v2, lambda);
    return segment_minimum(m_, x, d1, d2, v1, v2, lambda);
  }

  void seed(Index i, double value, Index pred = -1) {
    if (value < d_[static_cast<std::size_t>(i)]) {
      d_[static_cast<std::size_t>(i)] = value;
      pred_[static_cast<std::size_t>(i)] = pred;
      heap_.push({value, i});
    }
  }

  void accept_source(Index i, double value = 0.0) {
    d_[static_cast<std::size_t>(i)] = value;
    state_[static_cast<std::size_t>(i)] = 2;
  }

  // Finite-valued sources (cells of the set next to its zero level) are
  // expanded before the sweep; -inf sources never propagate.
  void run(const std::vector<std::uint8_t>* source) {
    Index remaining = opts_.targets ? opts_.targets->count() : -1;
    if (opts_.targets)
      for (Index i = 0; i < g_.size(); ++i)
        if ((*opts_.targets)[i] && state_[static_cast<std::size_t>(i)] == 2) --remaining;
    std::vector<Entry> finite_sources;
    for (Index i = 0; i < g_.size(); ++i)
      if (state_[static_cast<std::size_t>(i)] == 2 && std::isfinite(d_[static_cast<std::size_t>(i)]))
        finite_sources.push_back({d_[static_cast<std::size_t>(i)], i});
    std::sort(finite_sources.begin(), finite_sources.end());
    for (const auto& [dv, p] : finite_sources) expand(p, dv);

    auto in_src = [&](Index i) { return source && (*source)[static_cast<std::size_t>(i)] != 0; };
    while (!heap_.empty() && remaining != 0) {
      const auto [dv, p] = heap_.top();
      heap_.pop();
      if (state_[static_cast<std::size_t>(p)] == 2 || dv > d_[static_cast<std::size_t>(p)]) continue;
      if (dv > opts_.cutoff) break;
      state_[static_cast<std::size_t>(p)] = 2;
      if (opts_.targets && (*opts_.targets)[p]) --remaining;
      if (in_src(p)) continue;
      expand(p, dv);
    }
    for (Index i = 0; i < g_.size(); ++i)
      if (state_[static_cast<std::size_t>(i)] != 2 && d_[static_cast<std::size_t>(i)] > opts_.cutoff)
        d_[static_cast<std::size_t>(i)] = kInf;
  }

  std::vector<double> take_d() { return std::move(d_); }
  std::vector<Index> take_pred() { return std::move(pred_); }

 private:
  void expand(Index p, double dv) {
    const Coord cp = g_.coords(p);
    const Vec xp = g_.center(p);
    for (std::size_t k = 0; k < st_.size(); ++k) {
      Coord cq = cp;
      for (int a = 0; a < g_.dim(); ++a) cq[a] += st_[k][a];
      if (!g_.valid(cq)) continue;
      const Index q = g_.index(cq);
      if (state_[static_cast<std::size_t>(q)] == 2) continue;
      const double cost = edge_cost_.empty() ? norm_at(xp + 0.5 * disp_[k], disp_[k]) : edge_cost_[k];
      relax(q, dv + cost, p);
      if (!opts_.interpolated) continue;
      const std::vector<int>& partners = (*partners_)[k];
      for (std::size_t n = 0; n < partners.size(); ++n) {
        const int kk = partners[n];
        Coord c2 = cq;
        for (int a = 0; a < g_.dim(); ++a) c2[a] -= st_[kk][a];
        if (!g_.valid(c2)) continue;
        const Index p2 = g_.index(c2);
        const double d2 = d_[static_cast<std::size_t>(p2)];
        if (state_[static_cast<std::size_t>(p2)] != 2 || !std::isfinite(d2)) continue;
        double lambda = 0.0;
        const double v = coeffs_.empty()
                             ? segment(xp + disp_[k] - 0.25 * (disp_[k] + disp_[kk]), dv, d2, disp_[k], disp_[kk], &lambda)
                             : segment_core(coeffs_[k][n], dv, d2, &lambda);
        relax(q, v, lambda < 0.5 ? p : p2);
      }
    }
  }

  void relax(Index q, double v, Index from) {
    if (v < d_[static_cast<std::size_t>(q)]) {
      d_[static_cast<std::size_t>(q)] = v;
      pred_[static_cast<std::size_t>(q)] = from;
      heap_.push({v, q});
    }
  }

  const MetricModel& m_;
  const GridDomain& g_;
  DistanceOptions opts_;
  const std::vector<Coord>& st_;
  const std::vector<std::vector<int>>* partners_ = nullptr;
  std::vector<Vec> disp_;
  std::vector<double> edge_cost_;
  std::vector<std::vector<SegmentCoeffs>> coeffs_;
  std::optional<QuadLinear> constant_;
  std::vector<double> d_;
  std::vector<Index> pred_;
  std::vector<std::uint8_t> state_;
  using Entry = std::pair<double, Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

// Level-set function of the mask: indicator smoothed by [1/4, 1/2, 1/4]
// along every axis, minus 1/2. Its zero set runs through the cell faces of
// flat boundary pieces and cuts across the corners of staircases.
std::vector<double> mask_level_set(const BorelMask& mask) {
  const GridDomain& g = mask.domain;
  std::vector<double> u(static_cast<std::size_t>(g.size()));
  for (Index i = 0; i < g.size(); ++i) u[static_cast<std::size_t>(i)] = mask[i] ? 1.0 : 0.0;
  std::vector<double> tmp(u.size());
  for (int k = 0; k < g.dim(); ++k) {
    for (Index i = 0; i < g.size(); ++i) {
      const Coord c = g.coords(i);
      Coord p = c, q = c;
      ++p[k];
      --q[k];
      const double up = g.valid(p) ? u[static_cast<std::size_t>(g.index(p))] : 0.0;
      const double uq = g.valid(q) ? u[static_cast<std::size_t>(g.index(q))] : 0.0;
      tmp[static_cast<std::size_t>(i)] = 0.25 * (up + uq) + 0.5 * u[static_cast<std::size_t>(i)];
    }
    u.swap(tmp);
  }
  for (double& v : u) v -= 0.5;
  return u;
}

DistanceField finish(const GridDomain& g, Direction dir, Solver& s, std::vector<std::uint8_t> source) {
  DistanceField f;
  f.domain = g;
  f.direction = dir;
  f.d = s.take_d();
  f.pred = s.take_pred();
  f.source = std::move(source);
  return f;
}

MetricPtr oriented(const MetricPtr& m, Direction dir) {
  return dir == Direction::Forward ? m : reverse_metric(m);
}

}  // namespace

const std::vector<Coord>& stencil(int dim) {
  static const std::vector<Coord> st[kMaxDim + 1] = {{}, build_stencil(1, true), build_stencil(2, true),
                                                     build_stencil(3, true)};
  return st[dim];
}

double segment_minimum(const MetricModel& m, const Vec& x, double d1, double d2, const Vec& v1, const Vec& v2,
                       double* lambda) {
  if (auto q = m.quadratic_linear(x)) return ql_segment_minimum(*q, d1, d2, v1, v2, lambda);
  return golden_min([&](double l) { return (1 - l) * d1 + l * d2 + m.norm(x, (1 - l) * v1 + l * v2); }, 0.0, 1.0,
                    lambda);
}

std::vector<Index> DistanceField::path_to(Index cell) const {
  std::vector<Index> path;
  Index c = cell;
  while (c >= 0) {
    path.push_back(c);
    if (path.size() > d.size()) throw Error(ErrorCode::PathNotFound, "predecessor chain has a cycle");
    c = pred[static_cast<std::size_t>(c)];
  }
  if (d[static_cast<std::size_t>(cell)] == std::numeric_limits<double>::infinity())
    throw Error(ErrorCode::PathNotFound, "cell is not reachable from the source");
  return path;
}

DistanceField distance_from_point(const MetricPtr& metric, const GridDomain& domain, const Vec& x0, Direction dir,
                                  const DistanceOptions& opts) {
  const Index c0 = domain.locate(x0);
  if (c0 < 0) throw Error(ErrorCode::SourceOutsideDomain, "source point lies outside the domain");
  const MetricPtr m = oriented(metric, dir);
  Solver s(*m, domain, opts);
  const Coord cc = domain.coords(c0);
  const int n = domain.dim();
  const int total = n == 1 ? 5 : n == 2 ? 25 : 125;
  for (int k = 0; k < total; ++k) {
    Coord c = cc;
    int r = k;
    for (int a = 0; a < n; ++a) {
      c[a] += r % 5 - 2;
      r /= 5;
    }
    if (!domain.valid(c)) continue;
    const Index i = domain.index(c);
    const Vec z = domain.center(i);
    const Vec v = z - x0;
    s.seed(i, v.norm() < kZeroDirection ? 0.0 : m->norm(0.5 * (z + x0), v));
  }
  s.run(nullptr);
  return finish(domain, dir, s, {});
}

DistanceField distance_from_mask(const MetricPtr& metric, const GridDomain& domain, const BorelMask& source,
                                 Direction dir, const DistanceOptions& opts) {
  if (!(source.domain == domain)) throw Error(ErrorCode::InvalidArgument, "mask belongs to another domain");
  if (source.empty()) throw Error(ErrorCode::EmptyInput, "distance from an empty set");
  const MetricPtr m = oriented(metric, dir);
  const std::vector<double> phi = mask_level_set(source);
  std::vector<std::uint8_t> inside(phi.size());
  bool any = false;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    inside[i] = phi[i] >= 0.0 ? 1 : 0;
    any = any || inside[i];
  }
  if (!any) throw Error(ErrorCode::EmptyInput, "set is too thin to resolve on this grid");

  Solver s(*m, domain, opts);
  const int n = domain.dim();
  // Near the zero set the signed distance is -φ / F*(-∇φ). Only cells with a
  // face neighbour across the zero set get it: across a diagonal φ has
  // saturated and the linearization overshoots, so the solver labels those.
  for (Index i = 0; i < domain.size(); ++i) {
    const Coord c = domain.coords(i);
    bool interface = false;
    Vec grad(n);
    for (int k = 0; k < n; ++k) {
      Coord p = c, q = c;
      ++p[k];
      --q[k];
      const double up = domain.valid(p) ? phi[static_cast<std::size_t>(domain.index(p))] : -0.5;
      const double uq = domain.valid(q) ? phi[static_cast<std::size_t>(domain.index(q))] : -0.5;
      const double u0 = phi[static_cast<std::size_t>(i)];
      // One-sided across a sign change: the smoothed profile is steepest there.
      const bool cp = (up >= 0.0) != (u0 >= 0.0), cq = (uq >= 0.0) != (u0 >= 0.0);
      interface = interface || cp || cq;
      if (cp && !cq)
        grad[k] = (up - u0) / domain.spacing(k);
      else if (cq && !cp)
        grad[k] = (u0 - uq) / domain.spacing(k);
      else
        grad[k] = (up - uq) / (2.0 * domain.spacing(k));
    }
    const double ph = phi[static_cast<std::size_t>(i)];
    double signed_d = -std::numeric_limits<double>::infinity();
    if (interface) {
      const double fs = dual_norm(*m, domain.center(i), -grad);
      signed_d = fs > 0.0 ? -ph / fs : (ph >= 0.0 ? 0.0 : kInf);
    }
    if (inside[static_cast<std::size_t>(i)])
      s.accept_source(i, std::min(signed_d, 0.0));
    else if (interface)
      s.seed(i, std::max(signed_d, 0.0));
  }
  s.run(&inside);
  return finish(domain, dir, s, std::move(inside));
}

}  // namespace finsler
