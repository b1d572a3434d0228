#pragma once

#include "finsler/distance.hpp"

#include <vector>

namespace finsler {

// Metric length of the straight chord a → b (8-piece midpoint rule).
double chord_length(const MetricModel& m, const Vec& a, const Vec& b);

// Replaces runs of the cell-centre chain by chords whose metric length does
// not exceed the chain's, removing the grid zig-zag.
std::vector<Vec> pull_string(const MetricModel& m, const std::vector<Vec>& pts);

// Grid geodesic given as a predecessor chain (target cell first, ending next
// to `source`), straightened and parametrized by metric arc length. It runs
// source → target for a forward field and target → source for a backward one.
struct StraightPath {
  std::vector<Vec> pts;
  std::vector<double> arc;

  // Point at fraction t of the arc length.
  Vec at(double t) const;
};

StraightPath straight_path(const MetricModel& m, const GridDomain& g, const std::vector<Index>& chain, const Vec& source,
                           Direction dir);
StraightPath straight_path(const MetricModel& m, const DistanceField& f, const Vec& source, Index cell);

}  // namespace finsler
