#include "finsler/geometry.hpp"

#include "geodesic_chain.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace finsler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative accuracy of Δ(h) measured on disks, squares, intervals and
// Randers balls against closed forms (worst case about 4%).
constexpr double kContentResolution = 0.05;

// P(Σ a_k U_k ≤ t) for independent U_k ~ U[0,1].
double uniform_sum_cdf(double t, const double* a, int m) {
  double total_a = 0.0, prod = 1.0, fact = 1.0;
  for (int k = 0; k < m; ++k) {
    total_a += a[k];
    prod *= a[k];
    fact *= k + 1;
  }
  if (t <= 0.0) return 0.0;
  if (t >= total_a) return 1.0;
  double acc = 0.0;
  for (int mask = 0; mask < (1 << m); ++mask) {
    double s = 0.0;
    int bits = 0;
    for (int k = 0; k < m; ++k)
      if (mask & (1 << k)) {
        s += a[k];
        ++bits;
      }
    const double v = t - s;
    if (v > 0.0) acc += (bits % 2 ? -1.0 : 1.0) * std::pow(v, m);
  }
  return std::clamp(acc / (fact * prod), 0.0, 1.0);
}

// Largest cost of a single axis step of one cell at x.
double step_cost(const MetricModel& m, const GridDomain& g, const Vec& x) {
  double c = 0.0;
  for (int k = 0; k < g.dim(); ++k) {
    Vec e = Vec::Zero(g.dim());
    e[k] = g.spacing(k);
    c = std::max({c, m.norm(x, e), m.norm(x, -e)});
  }
  return c;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo, std::size_t hi,
                double* intercept = nullptr) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (intercept) *intercept = (sy - slope * sx) / n;
  return slope;
}

std::string describe_point(const Vec& x) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (int k = 0; k < x.size(); ++k) os << (k ? " " : "") << x[k];
  os << ')';
  return os.str();
}

}  // namespace

double cell_fraction_below(const DistanceField& f, Index i, double eps) {
  const double d0 = f[i];
  if (std::isinf(d0)) return d0 < 0.0 ? 1.0 : 0.0;
  const GridDomain& g = f.domain;
  const Coord c = g.coords(i);
  double a[kMaxDim];
  double t = eps - d0;
  int m = 0;
  double amax = 0.0;
  double raw[kMaxDim];
  for (int k = 0; k < g.dim(); ++k) {
    Coord p = c, q = c;
    ++p[k];
    --q[k];
    auto usable = [&](const Coord& cc, double* out) {
      if (!g.valid(cc)) return false;
      const Index j = g.index(cc);
      if (!std::isfinite(f[j])) return false;
      *out = f[j];
      return true;
    };
    double dp = 0, dm = 0;
    const bool hp = usable(p, &dp), hm = usable(q, &dm);
    double grad = 0.0;
    if (hp && hm)
      grad = (dp - dm) / (2.0 * g.spacing(k));
    else if (hp)
      grad = (dp - d0) / g.spacing(k);
    else if (hm)
      grad = (d0 - dm) / g.spacing(k);
    raw[k] = std::abs(grad) * g.spacing(k);
    amax = std::max(amax, raw[k]);
  }
  for (int k = 0; k < g.dim(); ++k) {
    t += 0.5 * raw[k];
    if (raw[k] > 1e-4 * amax)
      a[m++] = raw[k];
    else
      t -= 0.5 * raw[k];  // negligible spread: use the mean
  }
  if (m == 0) return d0 < eps ? 1.0 : 0.0;
  return uniform_sum_cdf(t, a, m);
}

double mass_below(const DistanceField& f, const std::vector<double>& cell_mass, double eps) {
  double s = 0.0;
  for (Index i = 0; i < f.domain.size(); ++i) {
    if (f[i] == kInf) continue;
    const double fr = cell_fraction_below(f, i, eps);
    if (fr > 0.0) s += fr * cell_mass[static_cast<std::size_t>(i)];
  }
  return s;
}

BorelMask forward_ball(const DistanceField& f, double radius) {
  BorelMask b(f.domain);
  for (Index i = 0; i < f.domain.size(); ++i)
    if (f[i] < radius) b.set(i);
  return b;
}

BorelMask forward_neighborhood(const Chart& chart, const BorelMask& set, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "neighbourhood radius must be positive");
  DistanceOptions opts;
  opts.cutoff = 2.0 * eps;
  const DistanceField f = distance_from_mask(chart.metric, chart.domain, set, Direction::Forward, opts);
  BorelMask out = forward_ball(f, eps);
  out |= set;
  return out;
}

ContentEstimate minkowski_content(const Chart& chart, const BorelMask& set) {
  if (set.empty()) throw Error(ErrorCode::EmptyInput, "Minkowski content of an empty set");
  const GridDomain& g = chart.domain;
  const double h = g.max_spacing();
  double c = 0.0;
  for (Index i : boundary_cells(set)) c = std::max(c, step_cost(*chart.metric, g, g.center(i)));
  if (c == 0.0) c = step_cost(*chart.metric, g, g.center(set.cells().front()));

  ContentEstimate est;
  est.eps = {h, 2 * h, 4 * h, 8 * h};
  DistanceOptions opts;
  opts.cutoff = est.eps[3] + 4.0 * c;
  const DistanceField f = distance_from_mask(chart.metric, g, set, Direction::Forward, opts);
  for (Index i = 0; i < g.size(); ++i)
    if (g.on_boundary(i) && !set[i] && f[i] < est.eps[3] + c)
      throw Error(ErrorCode::TouchesBoundary,
                  "the 8h-neighbourhood reaches the domain boundary at " + describe_point(g.center(i)));

  est.mass = mass_below(f, chart.cell_mass, 0.0);
  for (int k = 0; k < 4; ++k)
    est.delta[k] = (mass_below(f, chart.cell_mass, est.eps[k]) - est.mass) / est.eps[k];
  // Extrapolating in ε amplifies the O(h²) wobble of the fractional counts
  // more than it removes bias, so the finest quotient is the estimate and
  // its first difference bounds the O(ε) term.
  est.value = est.delta[0];
  est.error_bar = std::max(std::abs(est.delta[1] - est.delta[0]), kContentResolution * std::abs(est.value));
  return est;
}

EntropyEstimate volume_entropy(const Chart& chart, const Vec& x0, double r_min, double r_max, int samples) {
  if (!(r_min > 0.0 && r_min < r_max)) throw Error(ErrorCode::InvalidArgument, "fit window needs 0 < r_min < r_max");
  if (samples < 4) throw Error(ErrorCode::InvalidArgument, "fit window needs at least 4 samples");
  const GridDomain& g = chart.domain;
  if (g.locate(x0) < 0) throw Error(ErrorCode::SourceOutsideDomain, "entropy base point outside the domain");
  const double c = step_cost(*chart.metric, g, x0);
  DistanceOptions opts;
  opts.cutoff = r_max + 4.0 * c;
  const DistanceField f = distance_from_point(chart.metric, g, x0, Direction::Forward, opts);
  for (Index i = 0; i < g.size(); ++i)
    if (g.on_boundary(i) && f[i] < r_max + c)
      throw Error(ErrorCode::WindowOutsideDomain,
                  "ball of radius " + std::to_string(r_max) + " reaches the boundary at " + describe_point(g.center(i)));

  EntropyEstimate e;
  for (int j = 0; j < samples; ++j) {
    const double r = r_min + (r_max - r_min) * j / (samples - 1);
    e.radii.push_back(r);
    e.log_mass.push_back(std::log(mass_below(f, chart.cell_mass, r)));
  }
  double icpt = 0.0;
  const std::size_t n = e.radii.size();
  e.value = ls_slope(e.radii, e.log_mass, 0, n, &icpt);
  double ss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = e.log_mass[j] - (icpt + e.value * e.radii[j]);
    ss += r * r;
  }
  e.residual = std::sqrt(ss / static_cast<double>(n));
  e.slope_first_half = ls_slope(e.radii, e.log_mass, 0, n / 2 + 1);
  e.slope_second_half = ls_slope(e.radii, e.log_mass, n / 2, n);
  e.error_bar = std::abs(e.slope_second_half - e.slope_first_half);
  return e;
}

CheegerBracket second_cheeger_bracket(const Chart& chart, const std::vector<CandidateSet>& candidates,
                                      double certified_lower, bool certified) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "Cheeger bracket needs at least one candidate set");
  CheegerBracket b;
  b.lower_certified = certified;
  b.lower = certified ? certified_lower : 0.0;
  b.upper = kInf;
  for (const CandidateSet& s : candidates) {
    const ContentEstimate c = minkowski_content(chart, s.mask);
    const double ratio = c.value / c.mass;
    if (ratio < b.upper) {
      b.upper = ratio;
      b.upper_error = c.error_bar / c.mass;
      b.witness = s.label;
    }
  }
  return b;
}

std::vector<Index> boundary_cells(const BorelMask& set) {
  std::vector<Index> out;
  const GridDomain& g = set.domain;
  for (Index i = 0; i < g.size(); ++i) {
    if (!set[i]) continue;
    const Coord c = g.coords(i);
    bool edge = false;
    for (int k = 0; k < g.dim() && !edge; ++k)
      for (int s : {-1, 1}) {
        Coord d = c;
        d[k] += s;
        if (!g.valid(d) || !set[g.index(d)]) {
          edge = true;
          break;
        }
      }
    if (edge) out.push_back(i);
  }
  return out;
}

namespace {

// Boundary cells first, then a stride through the interior, at most `cap`.
std::vector<Index> sample_cells(const BorelMask& set, int cap) {
  std::vector<Index> bnd = boundary_cells(set);
  std::vector<Index> out;
  const std::size_t bcap = static_cast<std::size_t>(cap) * 3 / 4;
  const std::size_t bstride = std::max<std::size_t>(1, (bnd.size() + bcap - 1) / bcap);
  for (std::size_t k = 0; k < bnd.size(); k += bstride) out.push_back(bnd[k]);
  std::vector<Index> all = set.cells();
  std::vector<Index> interior;
  std::set_difference(all.begin(), all.end(), bnd.begin(), bnd.end(), std::back_inserter(interior));
  const std::size_t room = static_cast<std::size_t>(cap) > out.size() ? cap - out.size() : 0;
  if (room > 0 && !interior.empty()) {
    const std::size_t stride = std::max<std::size_t>(1, (interior.size() + room - 1) / room);
    for (std::size_t k = stride / 2; k < interior.size(); k += stride) out.push_back(interior[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

namespace {

std::vector<MidpointSet> midpoint_sets(const Chart& chart, const BorelMask& a, const BorelMask& b,
                                       const std::vector<double>& ts, int max_samples) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "midpoint set needs non-empty A and B");
  for (double t : ts)
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidArgument, "t must lie in (0,1)");
  const GridDomain& g = chart.domain;
  std::vector<MidpointSet> zs(ts.size());
  for (MidpointSet& z : zs) z.mask = BorelMask(g);
  const std::vector<Index> targets = b.cells();
  for (Index s : sample_cells(a, max_samples)) {
    DistanceOptions opts;
    opts.targets = &b;
    const DistanceField f = distance_from_point(chart.metric, g, g.center(s), Direction::Forward, opts);
    for (Index q : targets) {
      const StraightPath path = straight_path(*chart.metric, f, g.center(s), q);
      for (std::size_t n = 0; n < ts.size(); ++n) {
        const Index pick = g.locate(path.at(ts[n]));
        zs[n].mask.set(pick);
      }
    }
    for (MidpointSet& z : zs) ++z.samples;
  }
  for (MidpointSet& z : zs) {
    z.mask = z.mask.dilated();
    z.tolerance = 2.0 * g.max_spacing();
  }
  return zs;
}

}  // namespace

MidpointSet midpoint_set(const Chart& chart, const BorelMask& a, const BorelMask& b, double t, int max_samples) {
  return midpoint_sets(chart, a, b, {t}, max_samples).front();
}

std::vector<BrunnMinkowskiRow> brunn_minkowski_check(const Chart& chart, const BorelMask& a, const BorelMask& b,
                                                     const std::vector<double>& ts) {
  const double la = std::log(a.mass(chart.cell_mass));
  const double lb = std::log(b.mass(chart.cell_mass));
  const std::vector<MidpointSet> zs = midpoint_sets(chart, a, b, ts, 48);
  std::vector<BrunnMinkowskiRow> rows;
  for (std::size_t n = 0; n < ts.size(); ++n) {
    BrunnMinkowskiRow r;
    r.t = ts[n];
    r.log_mass_z = std::log(zs[n].mask.mass(chart.cell_mass));
    r.rhs = (1.0 - r.t) * la + r.t * lb;
    r.tolerance = zs[n].tolerance;
    r.pass = r.log_mass_z >= r.rhs;
    rows.push_back(r);
  }
  return rows;
}

IsoperimetricReport isoperimetric_check(const Chart& chart, const EntropyEstimate& ve, bool certified,
                                        const std::vector<CandidateSet>& sets,
                                        const std::vector<CandidateSet>& ball_family) {
  IsoperimetricReport rep;
  rep.ve = ve.value;
  rep.ve_error = ve.error_bar;
  rep.hypothesis_certified = certified;
  for (const CandidateSet& s : sets) {
    const ContentEstimate c = minkowski_content(chart, s.mask);
    IsoperimetricRow row;
    row.label = s.label;
    row.content = c.value;
    row.content_error = c.error_bar;
    row.mass = c.mass;
    row.ratio = c.value / c.mass;
    row.slack = c.error_bar + ve.error_bar * c.mass;
    row.pass = c.value + row.slack >= ve.value * c.mass;
    rep.all_pass = rep.all_pass && row.pass;
    rep.rows.push_back(row);
  }
  rep.sharpness_ratio = kInf;
  for (const CandidateSet& s : ball_family) {
    const ContentEstimate c = minkowski_content(chart, s.mask);
    if (c.value / c.mass < rep.sharpness_ratio) {
      rep.sharpness_ratio = c.value / c.mass;
      rep.sharpness_witness = s.label;
    }
  }
  rep.sharpness_gap = rep.sharpness_ratio - ve.value;
  return rep;
}

double diameter(const Chart& chart, const BorelMask& set, int max_sources) {
  if (set.empty()) throw Error(ErrorCode::EmptyInput, "diameter of an empty set");
  const GridDomain& g = chart.domain;
  double best = 0.0;
  const std::vector<Index> cells = set.cells();
  for (Index s : sample_cells(set, max_sources)) {
    DistanceOptions opts;
    opts.targets = &set;
    const DistanceField f = distance_from_point(chart.metric, g, g.center(s), Direction::Forward, opts);
    for (Index q : cells) best = std::max(best, f[q]);
  }
  return best;
}

}  // namespace finsler
