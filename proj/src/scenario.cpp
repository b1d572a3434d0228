#include "finsler/scenario.hpp"

#include "finsler/curvature.hpp"
#include "finsler/distance.hpp"
#include "finsler/geometry.hpp"
#include "finsler/metric_core.hpp"
#include "finsler/transport.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace finsler {

namespace {

// Largest grid the harness accepts (cells over all axes).
constexpr double kMaxCells = 4.0e6;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
  if (!n.IsMap()) invalid(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : n) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) invalid(join(path, key), "unknown field");
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    invalid(path, "has the wrong type");
  }
}

template <class T>
void read(const YAML::Node& parent, const std::string& path, const std::string& key, T& out) {
  if (const YAML::Node n = parent[key]) out = scalar<T>(n, join(path, key));
}

template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence()) invalid(path, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<T>(n[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

Mat matrix(const YAML::Node& n, const std::string& path, int dim) {
  if (!n.IsSequence() || static_cast<int>(n.size()) != dim) invalid(path, "expected " + std::to_string(dim) + " rows");
  Mat m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const std::vector<double> row = list<double>(n[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    if (static_cast<int>(row.size()) != dim) invalid(path, "rows need " + std::to_string(dim) + " entries");
    for (int j = 0; j < dim; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

GridSpec grid_spec(const YAML::Node& n, const std::string& path) {
  require_keys(n, path, {"lo", "hi", "cells"});
  for (const char* k : {"lo", "hi", "cells"})
    if (!n[k]) invalid(join(path, k), "missing");
  GridSpec g;
  g.lo = list<double>(n["lo"], join(path, "lo"));
  g.hi = list<double>(n["hi"], join(path, "hi"));
  g.cells = list<int>(n["cells"], join(path, "cells"));
  if (g.lo.empty() || g.lo.size() > static_cast<std::size_t>(kMaxDim) || g.hi.size() != g.lo.size() ||
      g.cells.size() != g.lo.size())
    invalid(path, "lo, hi and cells need one entry per axis (1 to 3 axes)");
  double total = 1.0;
  for (std::size_t k = 0; k < g.lo.size(); ++k) {
    if (!(g.hi[k] > g.lo[k])) invalid(join(path, "hi"), "must exceed lo on every axis");
    if (g.cells[k] < 4) invalid(join(path, "cells"), "needs at least 4 cells per axis");
    total *= g.cells[k];
  }
  if (total > kMaxCells) invalid(join(path, "cells"), "exceeds the 4e6 cell budget");
  return g;
}

PairSpec pair_spec(const YAML::Node& n, const std::string& path) {
  require_keys(n, path, {"pairs", "t", "min_size", "max_size", "chart"});
  PairSpec p;
  read(n, path, "pairs", p.pairs);
  if (n["t"]) p.ts = list<double>(n["t"], join(path, "t"));
  read(n, path, "min_size", p.min_size);
  read(n, path, "max_size", p.max_size);
  if (n["chart"]) p.chart = grid_spec(n["chart"], join(path, "chart"));
  if (p.pairs < 0) invalid(join(path, "pairs"), "must be >= 0");
  for (double t : p.ts)
    if (!(t > 0.0 && t < 1.0)) invalid(join(path, "t"), "values must lie in (0, 1)");
  if (!(p.min_size > 0.0 && p.min_size <= p.max_size)) invalid(path, "needs 0 < min_size <= max_size");
  return p;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string describe(const Vec& x) {
  std::string s = "(";
  for (Eigen::Index k = 0; k < x.size(); ++k) s += (k ? "," : "") + fmt(x[k]);
  return s + ")";
}

std::uint64_t subseed(std::uint64_t seed, std::uint64_t stream) { return seed * 0x9E3779B97F4A7C15ull + stream; }

BorelMask random_piece_union(const GridDomain& g, const std::vector<double>& lo, const std::vector<double>& hi,
                             int pieces, double min_size, double max_size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = g.dim();
  BorelMask m(g);
  for (int p = 0; p < pieces; ++p) {
    const double size = min_size + (max_size - min_size) * u01(rng);
    const bool box = n == 1 || u01(rng) < 0.5;
    Vec c(n), half(n);
    for (int k = 0; k < n; ++k) {
      half[k] = box ? 0.5 * size * (n == 1 ? 1.0 : 0.5 + 0.5 * u01(rng)) : 0.5 * size;
      const double a = lo[static_cast<std::size_t>(k)] + half[k], b = hi[static_cast<std::size_t>(k)] - half[k];
      c[k] = a < b ? a + (b - a) * u01(rng) : 0.5 * (lo[static_cast<std::size_t>(k)] + hi[static_cast<std::size_t>(k)]);
    }
    for (Index i = 0; i < g.size(); ++i) {
      const Vec x = g.center(i);
      bool in = true;
      if (box) {
        for (int k = 0; k < n && in; ++k) in = std::abs(x[k] - c[k]) < half[k];
      } else {
        in = (x - c).norm() < half[0];
      }
      if (in) m.set(i);
    }
  }
  return m;
}

class Runner {
 public:
  Runner(const ScenarioConfig& cfg, unsigned steps) : cfg_(cfg), steps_(with_dependencies(steps)) {
    metric_ = build_metric(cfg.metric);
    chart_ = Chart::make(metric_, build_measure(cfg.density, metric_), cfg.domain.domain());
    if (cfg.sets.chart)
      set_chart_ = Chart::make(metric_, chart_.measure, cfg.sets.chart->domain());
    else
      set_chart_ = chart_;
    bm_chart_ = cfg.brunn_minkowski.chart ? Chart::make(metric_, chart_.measure, cfg.brunn_minkowski.chart->domain())
                                          : set_chart_;
    cd_chart_ = cfg.convexity.chart ? Chart::make(metric_, chart_.measure, cfg.convexity.chart->domain()) : set_chart_;
    region_lo_ = cfg.sets.region_lo;
    region_hi_ = cfg.sets.region_hi;
    const GridDomain& sg = set_chart_.domain;
    if (region_lo_.empty())
      for (int k = 0; k < sg.dim(); ++k) {
        const double w = sg.hi(k) - sg.lo(k);
        region_lo_.push_back(sg.lo(k) + 0.15 * w);
        region_hi_.push_back(sg.hi(k) - 0.15 * w);
      }
  }

  std::vector<ReportRecord> run() {
    if (on(kUniformity) || on(kReversibility)) uniformity();
    if (on(kReversibility)) reversibility();
    if (on(kCurvature)) curvature();
    if (on(kEntropy)) entropy();
    if (on(kCheeger) || on(kIsoperimetric)) candidate_sets();
    if (on(kCheeger)) cheeger();
    if (on(kEigen) && !cfg_.radii.empty()) eigen();
    if (on(kIsoperimetric) && !sets_.empty()) isoperimetric();
    if (on(kCoarea)) coarea();
    if (on(kCheegerBuser) && !cfg_.radii.empty()) cheeger_buser();
    if (on(kBrunnMinkowski) && cfg_.brunn_minkowski.pairs > 0) brunn_minkowski();
    if (on(kConvexity) && cfg_.convexity.pairs > 0) convexity();
    expectations();
    return std::move(records_);
  }

 private:
  bool on(unsigned s) const { return (steps_ & s) != 0; }

  Status assertion(bool ok, bool gated) const {
    if (gated && !certified_) return Status::Info;
    return ok ? Status::Pass : Status::Fail;
  }

  void add(const std::string& quantity, double value, double error, Status status, Provenance prov,
           const std::string& anchor, std::string witness = {}) {
    if (status == Status::Fail && witness.empty()) witness = "value " + fmt(value);
    records_.push_back({cfg_.name, quantity, value, error, status, prov, anchor, std::move(witness)});
  }

  void uniformity() {
    uc_ = uniformity_constants(*metric_, sample_points(chart_.domain, cfg_.uniformity_per_axis),
                               cfg_.uniformity_directions);
    add("kappa", uc_.kappa, 0.0, Status::Info, Provenance::Quadrature, "uniform smoothness constant",
        "at " + describe(uc_.kappa_witness.x));
    add("kappa_star", uc_.kappa_star, 0.0, Status::Info, Provenance::Quadrature, "uniform convexity constant",
        "at " + describe(uc_.kappa_star_witness.x));
  }

  void reversibility() {
    const double lam = uc_.lambda_infinite ? INFINITY : uc_.lambda_F;
    const double cap = std::min(std::sqrt(uc_.kappa), 1.0 / std::sqrt(uc_.kappa_star));
    const bool ok = lam >= 1.0 - 1e-9 && lam <= cap * (1.0 + 1e-6);
    add("lambda_F", lam, 0.0, assertion(ok, false), Provenance::Quadrature,
        "reversibility chain 1 <= lambda_F <= min(sqrt(kappa), 1/sqrt(kappa*))",
        ok ? "" : "bound " + fmt(cap) + " at " + describe(uc_.lambda_witness.x));

    std::mt19937_64 rng(subseed(cfg_.seed, 1));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss;
    const GridDomain& g = chart_.domain;
    double worst_roundtrip = 0.0, worst_norm = 0.0;
    Vec worst_x;
    for (int s = 0; s < cfg_.legendre_samples; ++s) {
      Vec x(g.dim()), y(g.dim());
      for (int k = 0; k < g.dim(); ++k) {
        const double w = g.hi(k) - g.lo(k);
        x[k] = g.lo(k) + w * (0.05 + 0.9 * u01(rng));
        y[k] = gauss(rng);
      }
      if (y.norm() < 1e-6) continue;
      const Vec xi = legendre(*metric_, x, y);
      const Vec back = legendre_inverse(*metric_, x, xi);
      const double f = metric_->norm(x, y);
      const double e1 = (back - y).norm() / y.norm();
      const double e2 = std::abs(dual_norm(*metric_, x, xi) - f) / f;
      if (std::max(e1, e2) > std::max(worst_roundtrip, worst_norm)) worst_x = x;
      worst_roundtrip = std::max(worst_roundtrip, e1);
      worst_norm = std::max(worst_norm, e2);
    }
    const std::string where = worst_x.size() ? "worst at " + describe(worst_x) : "";
    add("legendre roundtrip error", worst_roundtrip, 0.0, assertion(worst_roundtrip <= 1e-6, false),
        Provenance::ClosedForm, "Legendre transform is a bijection", where);
    add("dual norm identity error", worst_norm, 0.0, assertion(worst_norm <= 1e-6, false), Provenance::ClosedForm,
        "F(y) = F*(L(y))", where);
  }

  void curvature() {
    const RicciCertification c = check_nonnegative_ricci_infinity(
        *metric_, chart_.measure, chart_.domain, cfg_.ricci_tolerance, cfg_.curvature_per_axis,
        cfg_.curvature_directions);
    certified_ = c.pass;
    add("min Ric_inf", c.minimum, c.tolerance, Status::Info, Provenance::Quadrature,
        "weighted Ricci curvature Ric_inf >= 0 certification",
        (c.pass ? "certified over " : "not certified over ") + std::to_string(c.samples) + " samples; minimum at x=" +
            describe(c.witness_x) + " y=" + describe(c.witness_y));
    const CurvatureReport r = curvature_report(*metric_, chart_.measure, chart_.domain, cfg_.Ns,
                                               cfg_.curvature_per_axis, cfg_.curvature_directions);
    add("min Ric", r.min_ric, 0.0, Status::Info, Provenance::Quadrature, "Ricci curvature");
    for (std::size_t k = 0; k < r.Ns.size(); ++k)
      add("min Ric_N N=" + fmt(r.Ns[k]), r.min_ric_N[k], 0.0, Status::Info, Provenance::Quadrature,
          "weighted Ricci curvature Ric_N");
  }

  void entropy() {
    ve_ = volume_entropy(chart_, cfg_.origin, cfg_.entropy_r_min, cfg_.entropy_r_max, cfg_.entropy_samples);
    add("volume entropy", ve_.value, ve_.error_bar, Status::Info, Provenance::Fit, "volume entropy of forward balls",
        "window [" + fmt(cfg_.entropy_r_min) + ", " + fmt(cfg_.entropy_r_max) + "], residual " + fmt(ve_.residual));
  }

  void candidate_sets() {
    if (have_sets_) return;
    have_sets_ = true;
    const SetFamilySpec& s = cfg_.sets;
    sets_ = random_sets(set_chart_.domain, region_lo_, region_hi_, s.random, s.max_pieces, s.min_size, s.max_size,
                        subseed(cfg_.seed, 2), "union");
    if (!s.ball_radii.empty()) {
      const DistanceField f = distance_from_point(metric_, set_chart_.domain, cfg_.origin);
      for (double r : s.ball_radii) balls_.push_back({"ball R=" + fmt(r), forward_ball(f, r)});
    }
  }

  void cheeger() {
    std::vector<CandidateSet> all = sets_;
    all.insert(all.end(), balls_.begin(), balls_.end());
    if (all.empty()) return;
    const CheegerBracket b = second_cheeger_bracket(set_chart_, all, ve_.value, certified_);
    add("second cheeger upper", b.upper, b.upper_error, Status::Info, Provenance::Quadrature,
        "second Cheeger constant, candidate infimum", "attained by " + b.witness);
    add("second cheeger lower", b.lower, certified_ ? ve_.error_bar : 0.0, Status::Info, Provenance::Fit,
        "second Cheeger constant >= volume entropy", certified_ ? "certified" : "no curvature certification");
    const bool ok = b.lower - ve_.error_bar <= b.upper + b.upper_error;
    add("second cheeger bracket", b.upper - b.lower, b.upper_error + ve_.error_bar, assertion(ok, true),
        Provenance::Quadrature, "second Cheeger constant >= volume entropy", "upper attained by " + b.witness);
  }

  void eigen() {
    ex_ = first_eigenvalue_exhaustion(chart_, cfg_.origin, cfg_.radii, cfg_.eigen, false);
    for (std::size_t k = 0; k < ex_.radii.size(); ++k)
      add("lambda1 R=" + fmt(ex_.radii[k]), ex_.lambdas[k], cfg_.solver_tolerance * ex_.lambdas[k], Status::Info,
          Provenance::Quadrature, "first Dirichlet eigenvalue of a forward ball",
          ex_.converged[k] ? "converged" : "iteration cap reached");
    add("lambda1 monotone", ex_.worst_increase, 0.0, assertion(ex_.monotone, false), Provenance::Quadrature,
        "first eigenvalue decreases along the exhaustion",
        ex_.monotone ? "" : "largest relative increase " + fmt(ex_.worst_increase));
    add("lambda1 limit", ex_.limit, ex_.limit_error, Status::Info, Provenance::Fit,
        "first eigenvalue as the exhaustion limit", "fit lambda = a + b/R^2");
  }

  void isoperimetric() {
    const IsoperimetricReport rep = isoperimetric_check(set_chart_, ve_, certified_, sets_, balls_);
    double worst = INFINITY;
    std::string witness;
    for (const IsoperimetricRow& r : rep.rows) {
      const double margin = (r.content + r.slack - rep.ve * r.mass) / r.mass;
      if (margin < worst) {
        worst = margin;
        witness = r.label + ": m+=" + fmt(r.content) + " m=" + fmt(r.mass) + " slack=" + fmt(r.slack);
      }
    }
    add("isoperimetric margin", worst, 0.0, assertion(rep.all_pass, true), Provenance::Quadrature,
        "isoperimetric inequality m+(E) >= VE m(E)", std::to_string(rep.rows.size()) + " sets; worst " + witness);
    if (!balls_.empty()) {
      const bool gated_check = cfg_.sets.sharpness_gap_max.has_value();
      const bool ok = !gated_check || rep.sharpness_gap < *cfg_.sets.sharpness_gap_max;
      add("isoperimetric sharpness gap", rep.sharpness_gap, rep.ve_error, gated_check ? assertion(ok, true) : Status::Info,
          Provenance::Quadrature, "isoperimetric inequality is sharp on forward balls",
          "infimum attained by " + rep.sharpness_witness);
    }
  }

  void coarea() {
    const GridDomain& g = set_chart_.domain;
    if (cfg_.tent_radius > 0.0) {
      const DistanceField d = distance_from_point(metric_, g, cfg_.origin);
      ScalarField f(g);
      for (Index i = 0; i < g.size(); ++i) f[i] = std::max(0.0, cfg_.tent_radius - d[i]);
      const CoareaReport r = coarea_check(set_chart_, f, cfg_.coarea_levels);
      const double rel = (r.lhs - r.rhs) / r.rhs;
      add("co-area tent relative gap", rel, r.slack / r.rhs, assertion(std::abs(rel) <= 0.05, false),
          Provenance::Quadrature, "co-area formula is an equality for distance tents",
          "lhs " + fmt(r.lhs) + " rhs " + fmt(r.rhs));
    }
    if (cfg_.coarea_fields <= 0) return;
    std::mt19937_64 rng(subseed(cfg_.seed, 3));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = -INFINITY;
    std::string witness;
    bool all = true;
    for (int n = 0; n < cfg_.coarea_fields; ++n) {
      const int bumps = 1 + static_cast<int>(u01(rng) * 3.0);
      std::vector<std::tuple<Vec, double, double>> spec;
      for (int b = 0; b < bumps; ++b) {
        const double radius = cfg_.sets.min_size + (cfg_.sets.max_size - cfg_.sets.min_size) * u01(rng);
        Vec c(g.dim());
        for (int k = 0; k < g.dim(); ++k) {
          const double lo = region_lo_[static_cast<std::size_t>(k)] + radius,
                       hi = region_hi_[static_cast<std::size_t>(k)] - radius;
          c[k] = lo < hi ? lo + (hi - lo) * u01(rng) : 0.5 * (lo + hi);
        }
        spec.emplace_back(c, radius, 0.5 + u01(rng));
      }
      const ScalarField f = ScalarField::sample(g, [&](const Vec& x) {
        double v = 0.0;
        for (const auto& [c, r, a] : spec) {
          const double q = 1.0 - (x - c).squaredNorm() / (r * r);
          if (q > 0.0) v += a * q * q * q;
        }
        return v;
      });
      const CoareaReport r = coarea_check(set_chart_, f, cfg_.coarea_levels);
      const double margin = (r.lhs - r.rhs - r.slack) / r.rhs;
      all = all && r.pass;
      if (margin > worst) {
        worst = margin;
        witness = "field #" + std::to_string(n) + ": lhs " + fmt(r.lhs) + " rhs " + fmt(r.rhs) + " slack " + fmt(r.slack);
      }
    }
    add("co-area excess", worst, 0.0, assertion(all, false), Provenance::Quadrature,
        "co-area inequality for smooth fields", std::to_string(cfg_.coarea_fields) + " fields; worst " + witness);
  }

  void cheeger_buser() {
    CheegerBuserInput in;
    in.constants = uc_;
    in.certified = certified_;
    in.entropy = ve_;
    in.exhaustion = ex_;
    in.solver_tolerance = cfg_.solver_tolerance;
    const CheegerBuserReport r = cheeger_buser_check(in);
    const std::string lam = "lambda1 " + fmt(r.lambda) + " +- " + fmt(r.lambda_slack);
    add("cheeger-buser upper", r.upper, r.upper_slack, assertion(r.upper_pass, false), Provenance::Fit,
        "lambda1 <= kappa^2 VE^2 / 4", lam);
    if (r.lower_available) {
      add("cheeger-buser lower (reversibility form)", r.lower_lambda_form, r.lower_slack,
          assertion(r.lower_lambda_pass, true), Provenance::Fit, "lambda1 >= SCh^2 / (4 lambda_F^2)", lam);
      add("cheeger-buser lower (kappa form)", r.lower_kappa_form, r.lower_slack, assertion(r.lower_kappa_pass, true),
          Provenance::Fit, "lambda1 >= SCh^2 / (4 kappa^2)", lam);
      add("cheeger-buser closure", r.closure, 0.0, Status::Info, Provenance::Fit,
          "relative width of the Cheeger-Buser sandwich");
    } else {
      add("cheeger-buser lower (reversibility form)", 0.0, 0.0, Status::Info, Provenance::Fit,
          "lambda1 >= SCh^2 / (4 lambda_F^2)", "no curvature certification or infinite reversibility");
    }
    for (const IntermediateBound& b : r.intermediate)
      add("intermediate bound delta=" + fmt(b.delta) + " R=" + fmt(b.R), b.bound, 0.0, assertion(b.pass, false),
          Provenance::Fit, "lambda1(B_2R) bounded by ball-mass growth",
          "lambda1(B_2R) " + fmt(b.lambda_2R));
  }

  void brunn_minkowski() {
    const PairSpec& p = cfg_.brunn_minkowski;
    std::mt19937_64 rng(subseed(cfg_.seed, 4));
    double worst = INFINITY;
    std::string witness;
    bool all = true;
    int rows = 0;
    for (int n = 0; n < p.pairs; ++n) {
      const BorelMask a = nonempty_piece(bm_chart_, p, rng), b = nonempty_piece(bm_chart_, p, rng);
      for (const BrunnMinkowskiRow& r : brunn_minkowski_check(bm_chart_, a, b, p.ts)) {
        ++rows;
        all = all && r.pass;
        if (r.log_mass_z - r.rhs < worst) {
          worst = r.log_mass_z - r.rhs;
          witness = "pair #" + std::to_string(n) + " t=" + fmt(r.t) + ": log m(Z)=" + fmt(r.log_mass_z) +
                    " rhs=" + fmt(r.rhs) + " dilation " + fmt(r.tolerance);
        }
      }
    }
    add("brunn-minkowski margin", worst, 0.0, assertion(all, true), Provenance::Quadrature,
        "Brunn-Minkowski inequality for t-intermediate sets", std::to_string(rows) + " rows; worst " + witness);
  }

  void convexity() {
    const PairSpec& p = cfg_.convexity;
    std::mt19937_64 rng(subseed(cfg_.seed, 5));
    double worst = -INFINITY;
    std::string witness;
    bool all = true;
    int rows = 0;
    for (int n = 0; n < p.pairs; ++n) {
      const BorelMask a = small_piece(cd_chart_, p, rng), b = small_piece(cd_chart_, p, rng);
      const ConvexityReport rep =
          cd_convexity_check(cd_chart_, DiscreteMeasure::uniform_on(a, cd_chart_.cell_mass),
                             DiscreteMeasure::uniform_on(b, cd_chart_.cell_mass), p.ts, certified_);
      for (const ConvexityRow& r : rep.rows) {
        ++rows;
        all = all && r.pass;
        if (r.entropy - r.chord - r.slack > worst) {
          worst = r.entropy - r.chord - r.slack;
          witness = "pair #" + std::to_string(n) + " t=" + fmt(r.t) + ": Ent=" + fmt(r.entropy) +
                    " chord=" + fmt(r.chord) + " slack=" + fmt(r.slack);
        }
      }
    }
    add("entropy convexity excess", worst, 0.0, assertion(all, true), Provenance::Quadrature,
        "CD(0,inf): entropy is convex along displacement interpolation",
        std::to_string(rows) + " rows; worst " + witness);
  }

  BorelMask nonempty_piece(const Chart& c, const PairSpec& p, std::mt19937_64& rng) const {
    for (int attempt = 0; attempt < 100; ++attempt) {
      BorelMask m = random_piece_union(c.domain, region_lo_, region_hi_, 1, p.min_size, p.max_size, rng);
      if (!m.empty()) return m;
    }
    throw Error(ErrorCode::ConfigInvalid, "pair sizes are below the grid resolution");
  }

  // Pieces for transport stay within the exact solver's support limit.
  BorelMask small_piece(const Chart& c, const PairSpec& p, std::mt19937_64& rng) const {
    double scale = 1.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
      BorelMask m = random_piece_union(c.domain, region_lo_, region_hi_, 1, scale * p.min_size,
                                       scale * p.max_size, rng);
      if (!m.empty() && static_cast<std::size_t>(m.count()) <= kMaxSupport) return m;
      if (!m.empty()) scale *= 0.85;
    }
    throw Error(ErrorCode::ConfigInvalid, "transport pair sizes do not fit the support limit");
  }

  void expectations() {
    std::vector<ReportRecord> extra;
    for (const Expectation& e : cfg_.expect)
      for (const ReportRecord& r : records_)
        if (r.quantity == e.quantity) {
          const bool ok = r.value >= e.min && r.value <= e.max;
          extra.push_back({cfg_.name, "expected " + e.quantity, r.value, r.error_bar, ok ? Status::Pass : Status::Fail,
                           r.provenance, "scenario expectation [" + fmt(e.min) + ", " + fmt(e.max) + "]",
                           ok ? "" : "outside the expected range"});
        }
    records_.insert(records_.end(), extra.begin(), extra.end());
  }

  const ScenarioConfig& cfg_;
  unsigned steps_;
  MetricPtr metric_;
  Chart chart_, set_chart_, bm_chart_, cd_chart_;
  std::vector<double> region_lo_, region_hi_;
  std::vector<ReportRecord> records_;
  UniformityConstants uc_;
  bool certified_ = false;
  EntropyEstimate ve_;
  ExhaustionReport ex_;
  bool have_sets_ = false;
  std::vector<CandidateSet> sets_, balls_;
};

}  // namespace

ScenarioConfig parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("<root>: ") + e.what());
  }
  require_keys(root, "", {"name", "seed", "metric", "measure", "domain", "origin", "uniformity", "curvature",
                          "entropy", "eigen", "sets", "coarea", "brunn_minkowski", "convexity", "expect"});
  ScenarioConfig c;
  if (!root["name"]) invalid("name", "missing");
  c.name = scalar<std::string>(root["name"], "name");
  read(root, "", "seed", c.seed);

  if (!root["metric"]) invalid("metric", "missing");
  const YAML::Node m = root["metric"];
  require_keys(m, "metric", {"family", "dim", "a", "b", "terms", "preset", "entries", "expression"});
  if (!m["family"]) invalid("metric.family", "missing");
  if (!m["dim"]) invalid("metric.dim", "missing");
  c.metric.family = scalar<std::string>(m["family"], "metric.family");
  c.metric.dim = scalar<int>(m["dim"], "metric.dim");
  if (c.metric.dim < 1 || c.metric.dim > kMaxDim) invalid("metric.dim", "must be 1, 2 or 3");
  const int n = c.metric.dim;
  if (m["a"]) c.metric.a = matrix(m["a"], "metric.a", n);
  if (m["b"]) {
    c.metric.b = to_vec(list<double>(m["b"], "metric.b"));
    if (c.metric.b.size() != n) invalid("metric.b", "needs one entry per axis");
  }
  if (m["terms"]) {
    if (!m["terms"].IsSequence()) invalid("metric.terms", "expected a list of matrices");
    for (std::size_t k = 0; k < m["terms"].size(); ++k)
      c.metric.terms.push_back(matrix(m["terms"][k], "metric.terms[" + std::to_string(k) + "]", n));
  }
  read(m, "metric", "preset", c.metric.preset);
  if (m["entries"]) c.metric.entries = list<std::string>(m["entries"], "metric.entries");
  read(m, "metric", "expression", c.metric.expression);

  if (const YAML::Node ms = root["measure"]) {
    require_keys(ms, "measure", {"density"});
    read(ms, "measure", "density", c.density);
  }
  if (!root["domain"]) invalid("domain", "missing");
  c.domain = grid_spec(root["domain"], "domain");
  if (root["origin"])
    c.origin = to_vec(list<double>(root["origin"], "origin"));
  else
    c.origin = Vec::Zero(n);

  if (const YAML::Node u = root["uniformity"]) {
    require_keys(u, "uniformity", {"per_axis", "directions", "legendre_samples"});
    read(u, "uniformity", "per_axis", c.uniformity_per_axis);
    read(u, "uniformity", "directions", c.uniformity_directions);
    read(u, "uniformity", "legendre_samples", c.legendre_samples);
  }
  if (const YAML::Node u = root["curvature"]) {
    require_keys(u, "curvature", {"tolerance", "per_axis", "directions", "N"});
    read(u, "curvature", "tolerance", c.ricci_tolerance);
    read(u, "curvature", "per_axis", c.curvature_per_axis);
    read(u, "curvature", "directions", c.curvature_directions);
    if (u["N"]) c.Ns = list<double>(u["N"], "curvature.N");
  }
  if (!root["entropy"]) invalid("entropy", "missing");
  {
    const YAML::Node e = root["entropy"];
    require_keys(e, "entropy", {"window", "samples"});
    if (!e["window"]) invalid("entropy.window", "missing");
    const std::vector<double> w = list<double>(e["window"], "entropy.window");
    if (w.size() != 2) invalid("entropy.window", "expected [r_min, r_max]");
    c.entropy_r_min = w[0];
    c.entropy_r_max = w[1];
    read(e, "entropy", "samples", c.entropy_samples);
  }
  if (const YAML::Node e = root["eigen"]) {
    require_keys(e, "eigen", {"radii", "tolerance", "max_iterations", "restarts", "solver_tolerance"});
    if (e["radii"]) c.radii = list<double>(e["radii"], "eigen.radii");
    read(e, "eigen", "tolerance", c.eigen.tolerance);
    read(e, "eigen", "max_iterations", c.eigen.max_iterations);
    read(e, "eigen", "restarts", c.eigen.restarts);
    read(e, "eigen", "solver_tolerance", c.solver_tolerance);
  }
  if (const YAML::Node s = root["sets"]) {
    require_keys(s, "sets", {"chart", "region", "random", "max_pieces", "min_size", "max_size", "ball_radii",
                             "sharpness_gap_max"});
    if (s["chart"]) c.sets.chart = grid_spec(s["chart"], "sets.chart");
    if (const YAML::Node r = s["region"]) {
      require_keys(r, "sets.region", {"lo", "hi"});
      if (!r["lo"] || !r["hi"]) invalid("sets.region", "needs lo and hi");
      c.sets.region_lo = list<double>(r["lo"], "sets.region.lo");
      c.sets.region_hi = list<double>(r["hi"], "sets.region.hi");
    }
    read(s, "sets", "random", c.sets.random);
    read(s, "sets", "max_pieces", c.sets.max_pieces);
    read(s, "sets", "min_size", c.sets.min_size);
    read(s, "sets", "max_size", c.sets.max_size);
    if (s["ball_radii"]) c.sets.ball_radii = list<double>(s["ball_radii"], "sets.ball_radii");
    if (s["sharpness_gap_max"])
      c.sets.sharpness_gap_max = scalar<double>(s["sharpness_gap_max"], "sets.sharpness_gap_max");
  }
  if (const YAML::Node s = root["coarea"]) {
    require_keys(s, "coarea", {"fields", "levels", "tent_radius"});
    read(s, "coarea", "fields", c.coarea_fields);
    read(s, "coarea", "levels", c.coarea_levels);
    read(s, "coarea", "tent_radius", c.tent_radius);
  }
  if (root["brunn_minkowski"]) c.brunn_minkowski = pair_spec(root["brunn_minkowski"], "brunn_minkowski");
  if (root["convexity"]) c.convexity = pair_spec(root["convexity"], "convexity");
  if (const YAML::Node e = root["expect"]) {
    if (!e.IsMap()) invalid("expect", "expected a mapping of quantity to [min, max]");
    for (const auto& kv : e) {
      const std::string q = kv.first.as<std::string>();
      const std::vector<double> range = list<double>(kv.second, "expect." + q);
      if (range.size() != 2 || !(range[0] <= range[1])) invalid("expect." + q, "expected [min, max]");
      c.expect.push_back({q, range[0], range[1]});
    }
  }
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate(const ScenarioConfig& c) {
  const int n = c.metric.dim;
  if (c.name.empty()) invalid("name", "must not be empty");
  if (static_cast<int>(c.domain.lo.size()) != n) invalid("domain", "dimension differs from metric.dim");
  if (c.origin.size() != n) invalid("origin", "needs one entry per axis");
  if (c.domain.domain().locate(c.origin) < 0) invalid("origin", "lies outside the domain");
  const std::string& f = c.metric.family;
  if (f == "randers") {
    if (c.metric.a.rows() != n) invalid("metric.a", "required for randers");
    if (c.metric.b.size() != n) invalid("metric.b", "required for randers");
  } else if (f == "minkowski-norm") {
    if (c.metric.terms.empty()) invalid("metric.terms", "required for minkowski-norm");
  } else if (f == "riemannian") {
    if (c.metric.preset.empty() == c.metric.entries.empty())
      invalid("metric", "riemannian needs exactly one of preset or entries");
    if (!c.metric.entries.empty() && static_cast<int>(c.metric.entries.size()) != n * n)
      invalid("metric.entries", "needs dim*dim expressions");
  } else if (f == "generic") {
    if (c.metric.expression.empty()) invalid("metric.expression", "required for generic");
  } else if (f != "euclidean") {
    invalid("metric.family", "unknown family '" + f + "'");
  }
  if (!(c.ricci_tolerance > 0.0)) invalid("curvature.tolerance", "must be > 0");
  if (c.curvature_per_axis < 1) invalid("curvature.per_axis", "must be >= 1");
  if (c.curvature_directions < 1) invalid("curvature.directions", "must be >= 1");
  if (c.uniformity_per_axis < 1) invalid("uniformity.per_axis", "must be >= 1");
  if (c.legendre_samples < 0) invalid("uniformity.legendre_samples", "must be >= 0");
  if (!(c.entropy_r_min > 0.0 && c.entropy_r_min < c.entropy_r_max)) invalid("entropy.window", "needs 0 < r_min < r_max");
  if (c.entropy_samples < 4) invalid("entropy.samples", "must be >= 4");
  for (std::size_t k = 0; k < c.radii.size(); ++k)
    if (!(c.radii[k] > 0.0) || (k > 0 && !(c.radii[k] > c.radii[k - 1])))
      invalid("eigen.radii", "must be positive and increasing");
  if (!c.radii.empty() && c.radii.size() < 2) invalid("eigen.radii", "needs at least two radii");
  if (!(c.eigen.tolerance > 0.0)) invalid("eigen.tolerance", "must be > 0");
  if (!(c.solver_tolerance > 0.0)) invalid("eigen.solver_tolerance", "must be > 0");
  if (c.eigen.max_iterations < 1) invalid("eigen.max_iterations", "must be >= 1");
  if (c.eigen.restarts < 0) invalid("eigen.restarts", "must be >= 0");
  const GridSpec& sg = c.sets.chart ? *c.sets.chart : c.domain;
  if (static_cast<int>(sg.lo.size()) != n) invalid("sets.chart", "dimension differs from metric.dim");
  if (!c.sets.region_lo.empty()) {
    if (static_cast<int>(c.sets.region_lo.size()) != n || static_cast<int>(c.sets.region_hi.size()) != n)
      invalid("sets.region", "needs one entry per axis");
    for (int k = 0; k < n; ++k) {
      const auto K = static_cast<std::size_t>(k);
      if (!(c.sets.region_lo[K] < c.sets.region_hi[K]) || c.sets.region_lo[K] <= sg.lo[K] ||
          c.sets.region_hi[K] >= sg.hi[K])
        invalid("sets.region", "must be a box strictly inside the set chart");
    }
  }
  for (const auto& [spec, path] : {std::pair{&c.brunn_minkowski, "brunn_minkowski"}, {&c.convexity, "convexity"}}) {
    if (!spec->chart) continue;
    const GridSpec& pc = *spec->chart;
    const std::string cp = std::string(path) + ".chart";
    if (static_cast<int>(pc.lo.size()) != n) invalid(cp, "dimension differs from metric.dim");
    for (int k = 0; k < n; ++k) {
      const auto K = static_cast<std::size_t>(k);
      const double w = sg.hi[K] - sg.lo[K];
      const double lo = c.sets.region_lo.empty() ? sg.lo[K] + 0.15 * w : c.sets.region_lo[K];
      const double hi = c.sets.region_hi.empty() ? sg.hi[K] - 0.15 * w : c.sets.region_hi[K];
      if (lo <= pc.lo[K] || hi >= pc.hi[K]) invalid(cp, "must contain sets.region strictly");
    }
  }
  if (c.sets.random < 0) invalid("sets.random", "must be >= 0");
  if (c.sets.max_pieces < 1) invalid("sets.max_pieces", "must be >= 1");
  if (!(c.sets.min_size > 0.0 && c.sets.min_size <= c.sets.max_size)) invalid("sets", "needs 0 < min_size <= max_size");
  for (double r : c.sets.ball_radii)
    if (!(r > 0.0)) invalid("sets.ball_radii", "must be positive");
  if (c.sets.sharpness_gap_max && !(*c.sets.sharpness_gap_max > 0.0)) invalid("sets.sharpness_gap_max", "must be > 0");
  if (c.coarea_fields < 0) invalid("coarea.fields", "must be >= 0");
  if (c.coarea_levels < 2 || c.coarea_levels % 2) invalid("coarea.levels", "must be even and >= 2");
  if (c.tent_radius < 0.0) invalid("coarea.tent_radius", "must be >= 0");
}

MetricPtr build_metric(const MetricSpec& s) {
  if (s.family == "euclidean") return make_euclidean(s.dim);
  if (s.family == "randers") return make_randers(s.a, s.b);
  if (s.family == "minkowski-norm") return make_minkowski_norm(s.terms, s.b.size() ? s.b : Vec(Vec::Zero(s.dim)));
  if (s.family == "riemannian")
    return s.preset.empty() ? make_riemannian_expr(s.dim, s.entries) : make_riemannian_preset(s.preset, s.dim);
  if (s.family == "generic") return make_generic(s.dim, s.expression);
  throw Error(ErrorCode::ConfigInvalid, "metric.family: unknown family '" + s.family + "'");
}

MeasureDensity build_measure(const std::string& density, const MetricPtr& metric) {
  if (density == "lebesgue") return MeasureDensity::lebesgue(metric->dim());
  if (density == "riemannian-volume") return MeasureDensity::riemannian_volume(metric);
  return MeasureDensity::expression(metric->dim(), density);
}

unsigned with_dependencies(unsigned s) {
  if (s & kReversibility) s |= kUniformity;
  if (s & kCheeger) s |= kCurvature | kEntropy;
  if (s & kIsoperimetric) s |= kCurvature | kEntropy;
  if (s & kCheegerBuser) s |= kUniformity | kCurvature | kEntropy | kEigen;
  if (s & (kBrunnMinkowski | kConvexity)) s |= kCurvature;
  return s;
}

unsigned steps_for_command(const std::string& command) {
  static const std::map<std::string, unsigned> table{
      {"run", kAllSteps},
      {"entropy", kEntropy},
      {"cheeger", kCheeger},
      {"eigen", kEigen},
      {"verify-iso", kIsoperimetric},
      {"verify-cb", kCheegerBuser},
      {"cd-check", kConvexity},
      {"bm-check", kBrunnMinkowski},
      {"coarea", kCoarea},
      {"curvature-report", kCurvature},
      {"metric", kReversibility},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
  return it->second;
}

std::vector<ReportRecord> run_scenario(const ScenarioConfig& cfg, unsigned steps) {
  validate(cfg);
  return Runner(cfg, steps).run();
}

std::string curvature_samples_csv(const ScenarioConfig& cfg) {
  validate(cfg);
  const MetricPtr m = build_metric(cfg.metric);
  const MeasureDensity mu = build_measure(cfg.density, m);
  const CurvatureReport r =
      curvature_report(*m, mu, cfg.domain.domain(), cfg.Ns, cfg.curvature_per_axis, cfg.curvature_directions);
  const int n = cfg.metric.dim;
  std::ostringstream os;
  for (int k = 0; k < n; ++k) os << "x" << k + 1 << ',';
  for (int k = 0; k < n; ++k) os << "y" << k + 1 << ',';
  os << "tau,S,S_dot,ric,ric_inf";
  for (double N : r.Ns) os << ",ric_N" << fmt(N);
  os << '\n';
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (const CurvatureSample& s : r.samples) {
    for (int k = 0; k < n; ++k) os << num(s.x[k]) << ',';
    for (int k = 0; k < n; ++k) os << num(s.y[k]) << ',';
    os << num(s.tau) << ',' << num(s.S) << ',' << num(s.S_dot) << ',' << num(s.ric) << ',' << num(s.ric_inf);
    for (double v : s.ric_N) os << ',' << num(v);
    os << '\n';
  }
  return os.str();
}

std::vector<CandidateSet> random_sets(const GridDomain& g, const std::vector<double>& lo, const std::vector<double>& hi,
                                      int count, int max_pieces, double min_size, double max_size, std::uint64_t seed,
                                      const std::string& prefix) {
  std::mt19937_64 rng(seed);
  std::vector<CandidateSet> out;
  for (int k = 0; k < count; ++k) {
    const int pieces = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_pieces));
    BorelMask m = random_piece_union(g, lo, hi, pieces, min_size, max_size, rng);
    for (int attempt = 0; m.empty() && attempt < 100; ++attempt)
      m = random_piece_union(g, lo, hi, pieces, min_size, max_size, rng);
    if (m.empty()) throw Error(ErrorCode::ConfigInvalid, "sets: sizes are below the grid resolution");
    if (m.touches_boundary()) throw Error(ErrorCode::ConfigInvalid, "sets.region: sets reach the chart boundary");
    out.push_back({prefix + "#" + std::to_string(k), std::move(m)});
  }
  return out;
}

}  // namespace finsler
