#include "geodesic_chain.hpp"

#include <algorithm>

namespace finsler {

double chord_length(const MetricModel& m, const Vec& a, const Vec& b) {
  constexpr int kPieces = 8;
  const Vec step = (b - a) / kPieces;
  double s = 0.0;
  for (int k = 0; k < kPieces; ++k) s += m.norm(a + (k + 0.5) * step, step);
  return s;
}

std::vector<Vec> pull_string(const MetricModel& m, const std::vector<Vec>& pts) {
  std::vector<double> arc{0.0};
  for (std::size_t k = 1; k < pts.size(); ++k) arc.push_back(arc.back() + chord_length(m, pts[k - 1], pts[k]));
  std::vector<Vec> out{pts.front()};
  std::size_t a = 0;
  while (a + 1 < pts.size()) {
    std::size_t lo = a + 1, hi = pts.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      if (chord_length(m, pts[a], pts[mid]) <= arc[mid] - arc[a] + 1e-12)
        lo = mid;
      else
        hi = mid - 1;
    }
    out.push_back(pts[lo]);
    a = lo;
  }
  return out;
}

Vec StraightPath::at(double t) const {
  const double s = t * arc.back();
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (s <= arc[k]) {
      const double seg = arc[k] - arc[k - 1];
      const double lam = seg > 0.0 ? (s - arc[k - 1]) / seg : 0.0;
      return pts[k - 1] + lam * (pts[k] - pts[k - 1]);
    }
  return pts.back();
}

StraightPath straight_path(const MetricModel& m, const GridDomain& g, const std::vector<Index>& cells, const Vec& source,
                           Direction dir) {
  std::vector<Vec> chain;
  for (Index c : cells) chain.push_back(g.center(c));
  if (chain.empty() || (source - chain.back()).norm() > 0.0) chain.push_back(source);
  if (dir == Direction::Forward) std::reverse(chain.begin(), chain.end());
  StraightPath p;
  p.pts = chain.size() > 1 ? pull_string(m, chain) : chain;
  p.arc.push_back(0.0);
  for (std::size_t k = 1; k < p.pts.size(); ++k) p.arc.push_back(p.arc.back() + chord_length(m, p.pts[k - 1], p.pts[k]));
  return p;
}

StraightPath straight_path(const MetricModel& m, const DistanceField& f, const Vec& source, Index cell) {
  return straight_path(m, f.domain, f.path_to(cell), source, f.direction);
}

}  // namespace finsler
