#include "finsler/grid.hpp"

#include "finsler/metric_core.hpp"

#include <cstdio>
#include <sstream>

namespace finsler {

// ---------------------------------------------------------------- GridDomain

GridDomain::GridDomain(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells) {
  dim_ = static_cast<int>(lo.size());
  if (dim_ < 1 || dim_ > kMaxDim || hi.size() != lo.size() || cells.size() != lo.size())
    throw Error(ErrorCode::InvalidArgument, "domain bounds and resolution must agree in dimension 1..3");
  size_ = 1;
  vol_ = 1.0;
  for (int k = 0; k < dim_; ++k) {
    if (!(hi[k] > lo[k])) throw Error(ErrorCode::InvalidArgument, "domain axis has hi <= lo");
    if (cells[k] < 8) throw Error(ErrorCode::InvalidArgument, "resolution must be at least 8 cells per axis");
    lo_[k] = lo[k];
    hi_[k] = hi[k];
    n_[k] = cells[k];
    h_[k] = (hi[k] - lo[k]) / cells[k];
    stride_[k] = size_;
    size_ *= cells[k];
    vol_ *= h_[k];
  }
}

double GridDomain::max_spacing() const {
  double h = 0.0;
  for (int k = 0; k < dim_; ++k) h = std::max(h, h_[k]);
  return h;
}

Vec GridDomain::center(Index i) const {
  const Coord c = coords(i);
  Vec x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = lo_[k] + (c[k] + 0.5) * h_[k];
  return x;
}

bool GridDomain::contains(const Vec& x) const {
  if (x.size() != dim_) return false;
  for (int k = 0; k < dim_; ++k)
    if (!(x[k] >= lo_[k] && x[k] <= hi_[k])) return false;
  return true;
}

Index GridDomain::locate(const Vec& x) const {
  if (!contains(x)) return -1;
  Coord c{};
  for (int k = 0; k < dim_; ++k)
    c[k] = std::min(n_[k] - 1, static_cast<int>(std::floor((x[k] - lo_[k]) / h_[k])));
  return index(c);
}

bool GridDomain::on_boundary(Index i) const {
  const Coord c = coords(i);
  for (int k = 0; k < dim_; ++k)
    if (c[k] == 0 || c[k] == n_[k] - 1) return true;
  return false;
}

bool GridDomain::operator==(const GridDomain& o) const {
  if (dim_ != o.dim_) return false;
  for (int k = 0; k < dim_; ++k)
    if (n_[k] != o.n_[k] || lo_[k] != o.lo_[k] || hi_[k] != o.hi_[k]) return false;
  return true;
}

// ---------------------------------------------------------------- measure

MeasureDensity::MeasureDensity(int dim, Fn sigma, std::string description)
    : dim_(dim), sigma_(std::move(sigma)), description_(std::move(description)) {}

MeasureDensity MeasureDensity::lebesgue(int dim) {
  return MeasureDensity(dim, [](const Vec&) { return 1.0; }, "lebesgue");
}

MeasureDensity MeasureDensity::expression(int dim, std::string_view source) {
  auto e = Expression::parse(source, chart_variables(dim, false));
  return MeasureDensity(
      dim, [e](const Vec& x) { return e(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))); },
      std::string(source));
}

MeasureDensity MeasureDensity::riemannian_volume(const MetricPtr& metric) {
  if (!metric->riemannian())
    throw Error(ErrorCode::InvalidArgument, "riemannian-volume needs a Riemannian metric family");
  return MeasureDensity(
      metric->dim(),
      [metric](const Vec& x) {
        const auto q = metric->quadratic_linear(x);
        return std::sqrt(q->A.determinant());
      },
      "riemannian-volume");
}

std::vector<double> MeasureDensity::cell_masses(const GridDomain& domain) const {
  if (domain.dim() != dim_) throw Error(ErrorCode::InvalidArgument, "measure and domain dimensions differ");
  std::vector<double> m(static_cast<std::size_t>(domain.size()));
  for (Index i = 0; i < domain.size(); ++i) {
    const Vec x = domain.center(i);
    const double s = sigma_(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
      std::ostringstream os;
      os << "density " << s << " at x = (" << x.transpose() << ")";
      throw Error(ErrorCode::NonPositiveDensity, os.str());
    }
    m[static_cast<std::size_t>(i)] = s * domain.cell_volume();
  }
  return m;
}

// ---------------------------------------------------------------- masks

Index BorelMask::count() const {
  Index c = 0;
  for (auto b : bits) c += b ? 1 : 0;
  return c;
}

double BorelMask::mass(const std::vector<double>& cell_mass) const {
  double m = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) m += cell_mass[i];
  return m;
}

std::vector<Index> BorelMask::cells() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out.push_back(static_cast<Index>(i));
  return out;
}

bool BorelMask::touches_boundary() const {
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] && domain.on_boundary(static_cast<Index>(i))) return true;
  return false;
}

bool BorelMask::subset_of(const BorelMask& other) const {
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] && !other.bits[i]) return false;
  return true;
}

BorelMask& BorelMask::operator|=(const BorelMask& o) {
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= o.bits[i];
  return *this;
}

BorelMask& BorelMask::operator&=(const BorelMask& o) {
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] &= o.bits[i];
  return *this;
}

BorelMask BorelMask::dilated() const {
  BorelMask out = *this;
  const int n = domain.dim();
  for (Index i = 0; i < domain.size(); ++i) {
    if (!(*this)[i]) continue;
    const Coord c = domain.coords(i);
    const int total = n == 1 ? 3 : n == 2 ? 9 : 27;
    for (int k = 0; k < total; ++k) {
      Coord d = c;
      int r = k;
      for (int a = 0; a < n; ++a) {
        d[a] += r % 3 - 1;
        r /= 3;
      }
      if (domain.valid(d)) out.set(domain.index(d));
    }
  }
  return out;
}

std::string BorelMask::to_rle() const {
  std::ostringstream os;
  char buf[64];
  os << "finsler-mask v1\ndomain " << domain.dim();
  for (int k = 0; k < domain.dim(); ++k) os << ' ' << domain.cells(k);
  for (int k = 0; k < domain.dim(); ++k) {
    std::snprintf(buf, sizeof buf, " %.17g", domain.lo(k));
    os << buf;
  }
  for (int k = 0; k < domain.dim(); ++k) {
    std::snprintf(buf, sizeof buf, " %.17g", domain.hi(k));
    os << buf;
  }
  os << "\nruns";
  std::uint8_t cur = 0;
  Index run = 0;
  for (auto b : bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != cur) {
      os << ' ' << run;
      cur = v;
      run = 0;
    }
    ++run;
  }
  os << ' ' << run << '\n';
  return os.str();
}

BorelMask BorelMask::from_rle(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string magic, version, tag;
  is >> magic >> version >> tag;
  if (magic != "finsler-mask" || version != "v1" || tag != "domain")
    throw Error(ErrorCode::ParseError, "not a finsler-mask v1 document");
  int dim = 0;
  is >> dim;
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::ParseError, "mask dimension out of range");
  std::vector<int> n(dim);
  std::vector<double> lo(dim), hi(dim);
  for (auto& v : n) is >> v;
  for (auto& v : lo) is >> v;
  for (auto& v : hi) is >> v;
  is >> tag;
  if (!is || tag != "runs") throw Error(ErrorCode::ParseError, "malformed mask header");
  BorelMask m(GridDomain(lo, hi, n));
  Index pos = 0;
  bool on = false;
  Index run = 0;
  while (is >> run) {
    if (run < 0 || pos + run > m.domain.size()) throw Error(ErrorCode::ParseError, "mask runs overflow the domain");
    for (Index k = 0; k < run; ++k) m.set(pos + k, on);
    pos += run;
    on = !on;
  }
  if (pos != m.domain.size()) throw Error(ErrorCode::ParseError, "mask runs do not cover the domain");
  return m;
}

// ---------------------------------------------------------------- fields

Vec ScalarField::differential(Index i) const {
  const int n = domain.dim();
  const Coord c = domain.coords(i);
  Vec du(n);
  for (int k = 0; k < n; ++k) {
    Coord p = c, m = c;
    ++p[k];
    --m[k];
    const double up = domain.valid(p) ? (*this)[domain.index(p)] : 0.0;
    const double um = domain.valid(m) ? (*this)[domain.index(m)] : 0.0;
    du[k] = (up - um) / (2.0 * domain.spacing(k));
  }
  return du;
}

ScalarField ScalarField::sample(const GridDomain& d, const std::function<double(const Vec&)>& f) {
  ScalarField u(d);
  for (Index i = 0; i < d.size(); ++i) u[i] = f(d.center(i));
  return u;
}

std::vector<Vec> gradient_field(const MetricModel& m, const ScalarField& u) {
  std::vector<Vec> out;
  out.reserve(u.values.size());
  for (Index i = 0; i < u.domain.size(); ++i) {
    const Vec du = u.differential(i);
    out.push_back(du.norm() < kZeroDirection ? Vec::Zero(m.dim()) : legendre_inverse(m, u.domain.center(i), du));
  }
  return out;
}

std::vector<Vec> weighted_gradient(const MetricModel& m, const ScalarField& u, const std::vector<Vec>& v) {
  if (v.size() != u.values.size()) throw Error(ErrorCode::InvalidArgument, "vector field size mismatch");
  std::vector<Vec> out;
  out.reserve(u.values.size());
  for (Index i = 0; i < u.domain.size(); ++i) {
    const Vec du = u.differential(i);
    if (du.norm() < kZeroDirection) {
      out.push_back(Vec::Zero(m.dim()));
      continue;
    }
    const Vec& vi = v[static_cast<std::size_t>(i)];
    if (!(vi.norm() > kZeroDirection))
      throw Error(ErrorCode::ZeroDirection, "reference field vanishes where du does not");
    out.push_back(fundamental_tensor(m, u.domain.center(i), vi).g_inv * du);
  }
  return out;
}

Chart Chart::make(MetricPtr metric, MeasureDensity measure, GridDomain domain) {
  if (metric->dim() != domain.dim() || measure.dim() != domain.dim())
    throw Error(ErrorCode::InvalidArgument, "metric, measure and domain dimensions differ");
  Chart c{std::move(metric), std::move(measure), std::move(domain), {}};
  c.cell_mass = c.measure.cell_masses(c.domain);
  return c;
}

}  // namespace finsler
