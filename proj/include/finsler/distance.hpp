#pragma once

#include "finsler/grid.hpp"

#include <limits>
#include <vector>

namespace finsler {

enum class Direction { Forward, Backward };

struct DistanceOptions {
  // Semi-Lagrangian updates across adjacent stencil directions; without
  // them the solver is a pure 16-neighbour (2-d) graph search.
  bool interpolated = true;
  // Labels above the cutoff are left at +inf.
  double cutoff = std::numeric_limits<double>::infinity();
  // Stop as soon as every marked cell is settled.
  const BorelMask* targets = nullptr;
};

struct DistanceField {
  GridDomain domain;
  Direction direction = Direction::Forward;
  std::vector<double> d;
  // Upwind predecessor per cell (-1 at sources).
  std::vector<Index> pred;
  // Source set for mask-sourced fields (empty for point sources).
  std::vector<std::uint8_t> source;

  double operator[](Index i) const { return d[static_cast<std::size_t>(i)]; }
  bool in_source(Index i) const { return !source.empty() && source[static_cast<std::size_t>(i)] != 0; }
  // Cell chain from `cell` back to the source, starting with `cell`.
  std::vector<Index> path_to(Index cell) const;
};

// Integer offsets with max-norm ≤ 2 and coprime components (16 in 2-d).
const std::vector<Coord>& stencil(int dim);

// Forward: d(x0, ·). Backward: d(·, x0), i.e. the forward field of the
// reversed metric.
DistanceField distance_from_point(const MetricPtr& metric, const GridDomain& domain, const Vec& x0,
                                  Direction direction = Direction::Forward, const DistanceOptions& opts = {});

// Signed distance from (or, backward, to) the smoothed set E_s = {φ ≥ 0},
// φ the indicator of E averaged by [1/4, 1/2, 1/4] along each axis minus
// 1/2. Cells next to the zero set start at -φ/F*(-∇φ); deeper cells of E_s
// are -inf. E_s keeps straight faces of E and rounds its corners.
DistanceField distance_from_mask(const MetricPtr& metric, const GridDomain& domain, const BorelMask& source,
                                 Direction direction = Direction::Forward, const DistanceOptions& opts = {});

// Minimum over λ ∈ [0,1] of (1-λ)d1 + λd2 + F((1-λ)v1 + λv2) for a norm
// frozen at one point; returns the value and stores the argmin.
double segment_minimum(const MetricModel& m, const Vec& x, double d1, double d2, const Vec& v1, const Vec& v2,
                       double* lambda = nullptr);

}  // namespace finsler
