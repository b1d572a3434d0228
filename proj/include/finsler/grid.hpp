#pragma once

#include "finsler/expression.hpp"
#include "finsler/metric.hpp"
#include "finsler/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace finsler {

using Index = std::int64_t;
using Coord = std::array<int, kMaxDim>;

// Rectangular chart domain split into uniform cells; axis 0 varies fastest.
class GridDomain {
 public:
  GridDomain() = default;
  GridDomain(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells);

  int dim() const { return dim_; }
  Index size() const { return size_; }
  int cells(int axis) const { return n_[axis]; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double max_spacing() const;
  double cell_volume() const { return vol_; }
  Index stride(int axis) const { return stride_[axis]; }

  Vec center(Index i) const;
  Coord coords(Index i) const {
    Coord c{};
    for (int k = 0; k < dim_; ++k) {
      c[k] = static_cast<int>(i % n_[k]);
      i /= n_[k];
    }
    return c;
  }
  Index index(const Coord& c) const {
    Index i = 0;
    for (int k = 0; k < dim_; ++k) i += c[k] * stride_[k];
    return i;
  }
  bool valid(const Coord& c) const {
    for (int k = 0; k < dim_; ++k)
      if (c[k] < 0 || c[k] >= n_[k]) return false;
    return true;
  }
  bool contains(const Vec& x) const;
  // Cell containing x, or -1 outside.
  Index locate(const Vec& x) const;
  // Cells in the outermost layer.
  bool on_boundary(Index i) const;

  bool operator==(const GridDomain& o) const;

 private:
  int dim_ = 0;
  Index size_ = 0;
  std::array<int, kMaxDim> n_{};
  std::array<double, kMaxDim> lo_{}, hi_{}, h_{};
  std::array<Index, kMaxDim> stride_{};
  double vol_ = 0.0;
};

// Positive density σ defining dm = σ dx.
class MeasureDensity {
 public:
  using Fn = std::function<double(const Vec&)>;

  MeasureDensity() = default;
  MeasureDensity(int dim, Fn sigma, std::string description);

  static MeasureDensity lebesgue(int dim);
  static MeasureDensity expression(int dim, std::string_view source);
  // σ = sqrt(det g(x)) of a Riemannian family.
  static MeasureDensity riemannian_volume(const MetricPtr& metric);

  int dim() const { return dim_; }
  const std::string& description() const { return description_; }
  double operator()(const Vec& x) const { return sigma_(x); }

  // σ(center)·cell volume per cell; NonPositiveDensity if σ ≤ 0 anywhere.
  std::vector<double> cell_masses(const GridDomain& domain) const;

 private:
  int dim_ = 0;
  Fn sigma_;
  std::string description_;
};

// Measurable set realized as a union of grid cells.
struct BorelMask {
  GridDomain domain;
  std::vector<std::uint8_t> bits;

  BorelMask() = default;
  explicit BorelMask(const GridDomain& d) : domain(d), bits(static_cast<std::size_t>(d.size()), 0) {}

  bool operator[](Index i) const { return bits[static_cast<std::size_t>(i)] != 0; }
  void set(Index i, bool v = true) { bits[static_cast<std::size_t>(i)] = v ? 1 : 0; }
  Index count() const;
  bool empty() const { return count() == 0; }
  double mass(const std::vector<double>& cell_mass) const;
  std::vector<Index> cells() const;
  bool touches_boundary() const;
  bool subset_of(const BorelMask& other) const;

  BorelMask& operator|=(const BorelMask& o);
  BorelMask& operator&=(const BorelMask& o);
  // Adds every cell sharing a face or corner with the set.
  BorelMask dilated() const;

  // "finsler-mask v1" run-length text: header, domain line, then runs.
  std::string to_rle() const;
  static BorelMask from_rle(std::string_view text);
};

// Grid function. Outside the domain (or outside a support mask) it is zero.
struct ScalarField {
  GridDomain domain;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridDomain& d, double fill = 0.0)
      : domain(d), values(static_cast<std::size_t>(d.size()), fill) {}

  double operator[](Index i) const { return values[static_cast<std::size_t>(i)]; }
  double& operator[](Index i) { return values[static_cast<std::size_t>(i)]; }

  // Central-difference differential with zero extension past the domain.
  Vec differential(Index i) const;

  static ScalarField sample(const GridDomain& d, const std::function<double(const Vec&)>& f);
};

// ∇u = L⁻¹(du) per cell, 0 where |du| < 1e-12.
std::vector<Vec> gradient_field(const MetricModel& m, const ScalarField& u);

// g^{ij}(x, V) ∂_j u per cell; ZeroDirection where V vanishes but du does not.
std::vector<Vec> weighted_gradient(const MetricModel& m, const ScalarField& u, const std::vector<Vec>& v);

// Metric, measure and grid bundled with the per-cell masses.
struct Chart {
  MetricPtr metric;
  MeasureDensity measure;
  GridDomain domain;
  std::vector<double> cell_mass;

  static Chart make(MetricPtr metric, MeasureDensity measure, GridDomain domain);
};

}  // namespace finsler
