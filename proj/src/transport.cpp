#include "finsler/transport.hpp"

#include "finsler/distance.hpp"
#include "geodesic_chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>

namespace finsler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFlowEps = 1e-15;

DiscreteMeasure from_map(const std::map<Index, double>& m) {
  DiscreteMeasure d;
  double total = 0.0;
  for (const auto& [c, w] : m) total += w;
  for (const auto& [c, w] : m) {
    if (w <= 0.0) continue;
    d.cells.push_back(c);
    d.weights.push_back(w / total);
  }
  return d;
}

// Min-cost transportation by successive shortest paths with potentials.
std::vector<double> solve_transport(const std::vector<double>& cost, const std::vector<double>& a,
                                    const std::vector<double>& b) {
  const std::size_t n0 = a.size(), n1 = b.size(), nv = n0 + n1;
  std::vector<double> flow(n0 * n1, 0.0), supply = a, demand = b, pot(nv, 0.0), dist(nv);
  std::vector<long> prev(nv);
  std::vector<char> done(nv);
  double remaining = 0.0;
  for (double v : supply) remaining += v;
  for (int guard = 0; remaining > 1e-14 && guard < static_cast<int>(8 * nv * nv + 16); ++guard) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n0; ++i)
      if (supply[i] > kFlowEps) dist[i] = std::max(0.0, -pot[i]);
    for (std::size_t step = 0; step < nv; ++step) {
      std::size_t u = nv;
      double best = kInf;
      for (std::size_t v = 0; v < nv; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == nv) break;
      done[u] = 1;
      if (u < n0) {
        for (std::size_t j = 0; j < n1; ++j) {
          const std::size_t v = n0 + j;
          if (done[v]) continue;
          const double nd = dist[u] + std::max(0.0, cost[u * n1 + j] + pot[u] - pot[v]);
          if (nd < dist[v]) {
            dist[v] = nd;
            prev[v] = static_cast<long>(u);
          }
        }
      } else {
        const std::size_t j = u - n0;
        for (std::size_t i = 0; i < n0; ++i) {
          if (done[i] || flow[i * n1 + j] <= kFlowEps) continue;
          const double nd = dist[u] + std::max(0.0, -cost[i * n1 + j] + pot[u] - pot[i]);
          if (nd < dist[i]) {
            dist[i] = nd;
            prev[i] = static_cast<long>(u);
          }
        }
      }
    }
    double dmax = 0.0;
    for (double d : dist)
      if (d < kInf) dmax = std::max(dmax, d);
    std::size_t sink = nv;
    double best = kInf;
    for (std::size_t j = 0; j < n1; ++j)
      if (demand[j] > kFlowEps && dist[n0 + j] < best) {
        best = dist[n0 + j];
        sink = n0 + j;
      }
    if (sink == nv) break;
    for (std::size_t v = 0; v < nv; ++v) pot[v] += dist[v] < kInf ? dist[v] : dmax;

    double amount = demand[sink - n0];
    std::size_t v = sink;
    while (prev[v] >= 0) {
      const std::size_t u = static_cast<std::size_t>(prev[v]);
      if (u >= n0) amount = std::min(amount, flow[v * n1 + (u - n0)]);
      v = u;
    }
    amount = std::min(amount, supply[v]);
    supply[v] -= amount;
    remaining -= amount;
    demand[sink - n0] -= amount;
    v = sink;
    while (prev[v] >= 0) {
      const std::size_t u = static_cast<std::size_t>(prev[v]);
      if (u < n0)
        flow[u * n1 + (v - n0)] += amount;
      else
        flow[v * n1 + (u - n0)] -= amount;
      v = u;
    }
  }
  for (double& f : flow)
    if (f < kFlowEps) f = 0.0;
  return flow;
}

void deposit_cloud(const GridDomain& g, const Vec& x, double mass, std::map<Index, double>& out) {
  const int n = g.dim();
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int k = 0; k < n; ++k) {
    const double u = (x[k] - g.lo(k)) / g.spacing(k) - 0.5;
    const double f = std::floor(u);
    base[k] = static_cast<int>(f);
    frac[k] = u - f;
  }
  for (int c = 0; c < (1 << n); ++c) {
    Coord cc{};
    double w = mass;
    for (int k = 0; k < n; ++k) {
      const int bit = (c >> k) & 1;
      cc[k] = std::clamp(base[k] + bit, 0, g.cells(k) - 1);
      w *= bit ? frac[k] : 1.0 - frac[k];
    }
    if (w > 0.0) out[g.index(cc)] += w;
  }
}

}  // namespace

DiscreteMeasure DiscreteMeasure::uniform_on(const BorelMask& mask, const std::vector<double>& cell_mass) {
  if (mask.empty()) throw Error(ErrorCode::EmptyInput, "uniform measure on an empty set");
  DiscreteMeasure d;
  const double total = mask.mass(cell_mass);
  for (Index c : mask.cells()) {
    d.cells.push_back(c);
    d.weights.push_back(cell_mass[static_cast<std::size_t>(c)] / total);
  }
  return d;
}

DiscreteMeasure DiscreteMeasure::dirac(Index cell) { return {{cell}, {1.0}}; }

void DiscreteMeasure::validate() const {
  if (cells.size() != weights.size() || cells.empty())
    throw Error(ErrorCode::InfeasibleMarginals, "measure needs matching, non-empty support and weights");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InfeasibleMarginals, "negative weight");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "weights sum to " << s;
    throw Error(ErrorCode::InfeasibleMarginals, os.str());
  }
}

double TransportPlan::marginal_error() const {
  const std::size_t n0 = mu0.cells.size(), n1 = mu1.cells.size();
  double e = 0.0;
  for (std::size_t i = 0; i < n0; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n1; ++j) s += at(i, j);
    e = std::max(e, std::abs(s - mu0.weights[i]));
  }
  for (std::size_t j = 0; j < n1; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n0; ++i) s += at(i, j);
    e = std::max(e, std::abs(s - mu1.weights[j]));
  }
  return e;
}

namespace {

// Forward field from one atom, stopped once all target atoms are settled.
DistanceField field_to_atoms(const Chart& chart, Index src, const std::vector<Index>& atoms) {
  BorelMask targets(chart.domain);
  for (Index c : atoms) targets.set(c);
  DistanceOptions opts;
  opts.targets = &targets;
  return distance_from_point(chart.metric, chart.domain, chart.domain.center(src), Direction::Forward, opts);
}

// `preds`, when given, receives each source atom's predecessor array so the
// interpolation can follow the same fields without recomputing them.
WassersteinResult wasserstein_impl(const Chart& chart, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, int p,
                                   std::vector<std::vector<std::int32_t>>* preds) {
  if (p != 1 && p != 2) throw Error(ErrorCode::InvalidArgument, "p must be 1 or 2");
  mu0.validate();
  mu1.validate();
  if (mu0.cells.size() > kMaxSupport || mu1.cells.size() > kMaxSupport)
    throw Error(ErrorCode::SupportTooLarge, "supports are limited to 400 atoms");
  const std::size_t n0 = mu0.cells.size(), n1 = mu1.cells.size();
  std::vector<double> cost(n0 * n1);
  for (std::size_t i = 0; i < n0; ++i) {
    const DistanceField f = field_to_atoms(chart, mu0.cells[i], mu1.cells);
    for (std::size_t j = 0; j < n1; ++j) {
      const double d = f[mu1.cells[j]];
      if (!std::isfinite(d)) throw Error(ErrorCode::PathNotFound, "target atom unreachable");
      cost[i * n1 + j] = p == 1 ? d : d * d;
    }
    if (preds) preds->push_back(std::vector<std::int32_t>(f.pred.begin(), f.pred.end()));
  }
  WassersteinResult r;
  r.plan.mu0 = mu0;
  r.plan.mu1 = mu1;
  r.plan.pi = solve_transport(cost, mu0.weights, mu1.weights);
  for (std::size_t k = 0; k < cost.size(); ++k) r.cost += r.plan.pi[k] * cost[k];
  r.distance = p == 1 ? r.cost : std::sqrt(r.cost);
  return r;
}

}  // namespace

double relative_entropy(const DiscreteMeasure& mu, const std::vector<double>& cell_mass) {
  mu.validate();
  double s = 0.0;
  for (std::size_t k = 0; k < mu.cells.size(); ++k) {
    const double w = mu.weights[k];
    if (w <= 0.0) continue;
    const double m = cell_mass[static_cast<std::size_t>(mu.cells[k])];
    if (!(m > 0.0)) throw Error(ErrorCode::SingularPart, "support meets a cell of zero reference mass");
    s += w * std::log(w / m);
  }
  return s;
}

namespace {

std::vector<Interpolant> interpolation_impl(const Chart& chart, const TransportPlan& plan, const std::vector<double>& ts,
                                           const std::vector<std::vector<std::int32_t>>* preds) {
  const GridDomain& g = chart.domain;
  const std::size_t n0 = plan.mu0.cells.size(), n1 = plan.mu1.cells.size();
  if (plan.pi.size() != n0 * n1) throw Error(ErrorCode::InvalidArgument, "plan size does not match its marginals");
  for (double t : ts)
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, "interpolation times must lie in [0, 1]");
  std::vector<std::map<Index, double>> cloud(ts.size()), nearest(ts.size());
  for (std::size_t i = 0; i < n0; ++i) {
    std::vector<Index> targets;
    for (std::size_t j = 0; j < n1; ++j)
      if (plan.at(i, j) > 0.0) targets.push_back(plan.mu1.cells[j]);
    if (targets.empty()) continue;
    const Index src = plan.mu0.cells[i];
    std::vector<std::int32_t> own;
    if (!preds) {
      const DistanceField f = field_to_atoms(chart, src, targets);
      own.assign(f.pred.begin(), f.pred.end());
    }
    const std::vector<std::int32_t>& pred = preds ? (*preds)[i] : own;
    for (std::size_t j = 0; j < n1; ++j) {
      const double mass = plan.at(i, j);
      if (!(mass > 0.0)) continue;
      std::vector<Index> cells;
      for (Index c = plan.mu1.cells[j]; c >= 0; c = pred[static_cast<std::size_t>(c)]) {
        cells.push_back(c);
        if (cells.size() > pred.size()) throw Error(ErrorCode::PathNotFound, "predecessor chain has a cycle");
      }
      const StraightPath path = straight_path(*chart.metric, g, cells, g.center(src), Direction::Forward);
      for (std::size_t q = 0; q < ts.size(); ++q) {
        const Vec x = path.at(ts[q]);
        deposit_cloud(g, x, mass, cloud[q]);
        nearest[q][g.locate(x)] += mass;
      }
    }
  }
  std::vector<Interpolant> out;
  for (std::size_t q = 0; q < ts.size(); ++q) out.push_back({ts[q], from_map(cloud[q]), from_map(nearest[q])});
  return out;
}

}  // namespace

WassersteinResult wasserstein_p(const Chart& chart, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, int p) {
  return wasserstein_impl(chart, mu0, mu1, p, nullptr);
}

std::vector<Interpolant> displacement_interpolation(const Chart& chart, const TransportPlan& plan,
                                                    const std::vector<double>& ts) {
  return interpolation_impl(chart, plan, ts, nullptr);
}

ConvexityReport cd_convexity_check(const Chart& chart, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                   const std::vector<double>& ts, bool certified) {
  ConvexityReport rep;
  rep.certified = certified;
  std::vector<std::vector<std::int32_t>> preds;
  const WassersteinResult w = wasserstein_impl(chart, mu0, mu1, 2, &preds);
  rep.w2 = w.distance;
  const double e0 = relative_entropy(mu0, chart.cell_mass), e1 = relative_entropy(mu1, chart.cell_mass);
  for (const Interpolant& it : interpolation_impl(chart, w.plan, ts, &preds)) {
    ConvexityRow row;
    row.t = it.t;
    row.entropy = relative_entropy(it.nearest, chart.cell_mass);
    row.chord = (1.0 - it.t) * e0 + it.t * e1;
    row.slack = std::max(0.0, row.entropy - relative_entropy(it.cloud, chart.cell_mass));
    row.pass = row.entropy <= row.chord + row.slack + 1e-12 * (1.0 + std::abs(row.chord));
    rep.all_pass = rep.all_pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace finsler
