#include "finsler/metric.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace finsler {

MetricModel::MetricModel(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw Error(ErrorCode::InvalidArgument, "metric dimension must be 1.." + std::to_string(kMaxDim));
}

std::optional<QuadLinear> MetricModel::quadratic_linear(const Vec&) const { return std::nullopt; }

std::vector<Jet> MetricModel::metric_matrix_jet(const Vec&) const {
  throw Error(ErrorCode::InvalidArgument, family() + " has no Riemannian metric matrix");
}

void MetricModel::check_dim(const Vec& v) const {
  if (v.size() != dim_)
    throw Error(ErrorCode::InvalidArgument, "vector of length " + std::to_string(v.size()) +
                                                " for a " + std::to_string(dim_) + "-d metric");
}

namespace {

struct Vars {
  std::vector<Jet> x, y;
};

Vars make_vars(const Vec& x, const Vec& y, bool with_base) {
  const int n = static_cast<int>(y.size());
  const int nv = with_base ? 2 * n : n;
  const int off = with_base ? n : 0;
  Vars v;
  for (int i = 0; i < n; ++i) {
    v.x.push_back(with_base ? Jet::variable(x[i], i, nv) : Jet(x[i], nv));
    v.y.push_back(Jet::variable(y[i], off + i, nv));
  }
  return v;
}

Jet quad_form(const Mat& a, const std::vector<Jet>& y) {
  const int n = static_cast<int>(y.size());
  Jet s(0.0, y[0].size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (a(i, j) != 0.0) s = s + (y[i] * y[j]) * a(i, j);
  return s;
}

void require_spd(const Mat& a, const char* what) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success || !a.isApprox(a.transpose(), 1e-12))
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " is not symmetric positive definite");
}

void require_admissible_drift(const Mat& a, const Vec& b) {
  if (b.size() != a.rows()) throw Error(ErrorCode::InvalidArgument, "drift vector has wrong length");
  const double s = b.dot(a.ldlt().solve(b));
  if (!(s < 1.0))
    throw Error(ErrorCode::InvalidArgument,
                "drift too large: bᵀA⁻¹b = " + std::to_string(s) + " must be < 1");
}

// ---------------------------------------------------------------- families

class EuclideanModel final : public MetricModel {
 public:
  using MetricModel::MetricModel;
  std::string family() const override { return "euclidean"; }
  double norm(const Vec& x, const Vec& y) const override {
    check_dim(x);
    check_dim(y);
    return y.norm();
  }
  Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const override {
    Vars v = make_vars(x, y, with_base);
    return quad_form(Mat::Identity(dim(), dim()), v.y);
  }
  bool x_independent() const override { return true; }
  bool reversible() const override { return true; }
  bool riemannian() const override { return true; }
  std::optional<QuadLinear> quadratic_linear(const Vec&) const override {
    return QuadLinear{Mat::Identity(dim(), dim()), Vec::Zero(dim())};
  }
  std::vector<Jet> metric_matrix_jet(const Vec& x) const override {
    std::vector<Jet> g;
    const int n = dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g.emplace_back(i == j ? 1.0 : 0.0, static_cast<int>(x.size()));
    return g;
  }
};

class NormSumModel final : public MetricModel {
 public:
  NormSumModel(std::vector<Mat> terms, Vec b, std::string name)
      : MetricModel(static_cast<int>(b.size())), terms_(std::move(terms)), b_(std::move(b)), name_(std::move(name)) {
    if (terms_.empty()) throw Error(ErrorCode::InvalidArgument, name_ + " needs at least one quadratic term");
    for (const Mat& a : terms_)
      if (a.rows() != dim() || a.cols() != dim())
        throw Error(ErrorCode::InvalidArgument, name_ + ": matrix size does not match dimension");
    require_spd(terms_.front(), "leading quadratic term");
    for (std::size_t k = 1; k < terms_.size(); ++k) {
      Eigen::SelfAdjointEigenSolver<Mat> es(terms_[k]);
      if (es.eigenvalues().minCoeff() < 0.0)
        throw Error(ErrorCode::NotPositiveDefinite, name_ + ": quadratic term is indefinite");
    }
    require_admissible_drift(terms_.front(), b_);
  }

  std::string family() const override { return name_; }

  double norm(const Vec& x, const Vec& y) const override {
    check_dim(x);
    check_dim(y);
    double f = b_.dot(y);
    for (const Mat& a : terms_) f += std::sqrt(std::max(0.0, y.dot(a * y)));
    return f;
  }

  Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const override {
    Vars v = make_vars(x, y, with_base);
    Jet f(0.0, v.y[0].size());
    for (int i = 0; i < dim(); ++i)
      if (b_[i] != 0.0) f = f + v.y[i] * b_[i];
    for (const Mat& a : terms_) f = f + sqrt(quad_form(a, v.y));
    return f * f;
  }

  bool x_independent() const override { return true; }
  bool reversible() const override { return b_.isZero(0.0); }
  bool riemannian() const override { return terms_.size() == 1 && b_.isZero(0.0); }

  std::optional<QuadLinear> quadratic_linear(const Vec&) const override {
    if (terms_.size() != 1) return std::nullopt;
    return QuadLinear{terms_.front(), b_};
  }

  std::vector<Jet> metric_matrix_jet(const Vec& x) const override {
    if (!riemannian()) return MetricModel::metric_matrix_jet(x);
    std::vector<Jet> g;
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) g.emplace_back(terms_.front()(i, j), static_cast<int>(x.size()));
    return g;
  }

 private:
  std::vector<Mat> terms_;
  Vec b_;
  std::string name_;
};

// Riemannian metric given by a matrix-valued function of x evaluated on jets.
class RiemannianModel final : public MetricModel {
 public:
  using MatrixFn = std::function<std::vector<Jet>(const std::vector<Jet>& x)>;

  RiemannianModel(int dim, MatrixFn fn, std::string name)
      : MetricModel(dim), fn_(std::move(fn)), name_(std::move(name)) {}

  std::string family() const override { return name_; }

  double norm(const Vec& x, const Vec& y) const override {
    check_dim(y);
    const Mat g = matrix(x);
    return std::sqrt(std::max(0.0, y.dot(g * y)));
  }

  Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const override {
    check_dim(y);
    Vars v = make_vars(x, y, with_base);
    const std::vector<Jet> g = fn_(v.x);
    const int n = dim();
    Jet s(0.0, v.y[0].size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s = s + g[i * n + j] * (v.y[i] * v.y[j]);
    return s;
  }

  bool reversible() const override { return true; }
  bool riemannian() const override { return true; }

  std::optional<QuadLinear> quadratic_linear(const Vec& x) const override {
    return QuadLinear{matrix(x), Vec::Zero(dim())};
  }

  std::vector<Jet> metric_matrix_jet(const Vec& x) const override {
    check_dim(x);
    std::vector<Jet> xs;
    for (int i = 0; i < dim(); ++i) xs.push_back(Jet::variable(x[i], i, dim()));
    return fn_(xs);
  }

 private:
  Mat matrix(const Vec& x) const {
    check_dim(x);
    std::vector<Jet> xs;
    for (int i = 0; i < dim(); ++i) xs.emplace_back(x[i], 0);
    const std::vector<Jet> g = fn_(xs);
    const int n = dim();
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = 0.5 * (g[i * n + j].v + g[j * n + i].v);
    return m;
  }

  MatrixFn fn_;
  std::string name_;
};

class GenericModel final : public MetricModel {
 public:
  GenericModel(int dim, std::string_view source)
      : MetricModel(dim), expr_(Expression::parse(source, chart_variables(dim, true))) {}

  std::string family() const override { return "generic"; }

  double norm(const Vec& x, const Vec& y) const override {
    check_dim(x);
    check_dim(y);
    double args[2 * kMaxDim];
    for (int i = 0; i < dim(); ++i) {
      args[i] = x[i];
      args[dim() + i] = y[i];
    }
    return expr_(std::span<const double>(args, 2 * dim()));
  }

  Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const override {
    check_dim(x);
    check_dim(y);
    Vars v = make_vars(x, y, with_base);
    std::vector<Jet> args = v.x;
    args.insert(args.end(), v.y.begin(), v.y.end());
    const Jet f = expr_.eval(args);
    return f * f;
  }

  bool x_independent() const override {
    for (int i = 0; i < dim(); ++i)
      if (expr_.depends_on(i)) return false;
    return true;
  }

 private:
  Expression expr_;
};

class FunctionModel final : public MetricModel {
 public:
  FunctionModel(int dim, NormFunction f, std::string name)
      : MetricModel(dim), f_(std::move(f)), name_(std::move(name)) {}

  std::string family() const override { return name_; }

  double norm(const Vec& x, const Vec& y) const override {
    check_dim(x);
    check_dim(y);
    return f_(x, y);
  }

  Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const override {
    check_dim(x);
    check_dim(y);
    const int n = dim();
    const int nv = with_base ? 2 * n : n;
    const int off = with_base ? n : 0;
    const double hy = 1e-4 * std::max(y.norm(), 1e-300);
    const double hx = 1e-4 * (1.0 + x.norm());

    auto sq = [&](const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>& dz) {
      Vec xx = x, yy = y;
      if (with_base) xx += dz.head(n);
      yy += dz.segment(off, n);
      const double f = f_(xx, yy);
      return f * f;
    };
    using Z = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
    auto step = [&](int k) { return k >= off ? hy : hx; };

    Jet j(0.0, nv);
    const Z zero = Z::Zero(nv);
    j.v = sq(zero);
    for (int a = 0; a < nv; ++a) {
      Z e = zero;
      e[a] = step(a);
      const double fp = sq(e), fm = sq(-e);
      j.g[a] = (fp - fm) / (2.0 * step(a));
      j.h(a, a) = (fp - 2.0 * j.v + fm) / (step(a) * step(a));
      for (int b = 0; b < a; ++b) {
        Z pp = zero, pm = zero;
        pp[a] = step(a);
        pp[b] = step(b);
        pm[a] = step(a);
        pm[b] = -step(b);
        const double v = (sq(pp) - sq(pm) - sq(-pm) + sq(-pp)) / (4.0 * step(a) * step(b));
        j.h(a, b) = j.h(b, a) = v;
      }
    }
    return j;
  }

 private:
  NormFunction f_;
  std::string name_;
};

class ReversedModel final : public MetricModel {
 public:
  explicit ReversedModel(MetricPtr inner) : MetricModel(inner->dim()), inner_(std::move(inner)) {}

  std::string family() const override { return "reversed " + inner_->family(); }
  double norm(const Vec& x, const Vec& y) const override { return inner_->norm(x, -y); }

  Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const override {
    Jet j = inner_->norm_sq_jet(x, -y, with_base);
    const int n = dim();
    const int off = with_base ? n : 0;
    Jet::Grad s = Jet::Grad::Ones(j.size());
    s.segment(off, n).setConstant(-1.0);
    j.g = j.g.cwiseProduct(s);
    j.h = j.h.cwiseProduct(s * s.transpose());
    return j;
  }

  bool x_independent() const override { return inner_->x_independent(); }
  bool reversible() const override { return inner_->reversible(); }
  bool riemannian() const override { return inner_->riemannian(); }

  std::optional<QuadLinear> quadratic_linear(const Vec& x) const override {
    auto q = inner_->quadratic_linear(x);
    if (q) q->b = -q->b;
    return q;
  }

  std::vector<Jet> metric_matrix_jet(const Vec& x) const override { return inner_->metric_matrix_jet(x); }

  MetricPtr reversed_of(MetricPtr) const override { return inner_; }

 private:
  MetricPtr inner_;
};

// Hyperbolic factor q(ρ) = (sinh²r / r² − 1) / r², ρ = r²; the series avoids
// the cancellation near the origin.
Jet hyperbolic_q(const Jet& rho) {
  if (rho.v < 0.5) {
    // q = Σ_{k≥2} 2^{2k-1} ρ^{k-2} / (2k)!
    double coef[14];
    for (int k = 2; k < 16; ++k) coef[k - 2] = std::ldexp(1.0, 2 * k - 1) / std::tgamma(2.0 * k + 1.0);
    Jet acc(coef[13], rho.size());
    for (int k = 12; k >= 0; --k) acc = acc * rho + coef[k];
    return acc;
  }
  const Jet s = sinh(sqrt(rho));
  return (s * s / rho - 1.0) / rho;
}

}  // namespace

std::shared_ptr<const MetricModel> MetricModel::reversed_of(std::shared_ptr<const MetricModel> self) const {
  if (reversible()) return self;
  return std::make_shared<ReversedModel>(std::move(self));
}

MetricPtr make_euclidean(int dim) { return std::make_shared<EuclideanModel>(dim); }

MetricPtr make_randers(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) throw Error(ErrorCode::InvalidArgument, "randers: A and b sizes differ");
  return std::make_shared<NormSumModel>(std::vector<Mat>{a}, b, "randers");
}

MetricPtr make_minkowski_norm(std::vector<Mat> terms, const Vec& b) {
  return std::make_shared<NormSumModel>(std::move(terms), b, "minkowski-norm");
}

MetricPtr make_riemannian_preset(std::string_view name, int dim) {
  using Fn = RiemannianModel::MatrixFn;
  const int n = dim;
  auto conformal = [n](const Jet& c) {
    std::vector<Jet> g;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g.push_back(i == j ? c : Jet(0.0, c.size()));
    return g;
  };
  Fn fn;
  if (name == "hyperbolic-half-plane") {
    fn = [conformal, n](const std::vector<Jet>& x) {
      if (x[n - 1].v <= 0.0) throw Error(ErrorCode::LeftDomain, "half-space chart needs x_n > 0");
      return conformal(1.0 / (x[n - 1] * x[n - 1]));
    };
  } else if (name == "hyperbolic-normal") {
    fn = [n](const std::vector<Jet>& x) {
      Jet rho(0.0, x[0].size());
      for (const Jet& xi : x) rho = rho + xi * xi;
      const Jet q = hyperbolic_q(rho);
      std::vector<Jet> g;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Jet e = q * (i == j ? rho - x[i] * x[j] : -(x[i] * x[j]));
          g.push_back(i == j ? e + 1.0 : e);
        }
      return g;
    };
  } else if (name == "round-sphere") {
    fn = [conformal](const std::vector<Jet>& x) {
      Jet r2(1.0, x[0].size());
      for (const Jet& xi : x) r2 = r2 + xi * xi;
      return conformal(4.0 / (r2 * r2));
    };
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown Riemannian preset '" + std::string(name) + "'");
  }
  return std::make_shared<RiemannianModel>(dim, std::move(fn), std::string(name));
}

MetricPtr make_riemannian_expr(int dim, const std::vector<std::string>& entries) {
  if (static_cast<int>(entries.size()) != dim * dim)
    throw Error(ErrorCode::InvalidArgument, "metric matrix needs " + std::to_string(dim * dim) + " entries");
  const auto vars = chart_variables(dim, false);
  std::vector<Expression> exprs;
  for (const auto& e : entries) exprs.push_back(Expression::parse(e, vars));
  auto fn = [exprs, dim](const std::vector<Jet>& x) {
    std::vector<Jet> g;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        g.push_back((exprs[i * dim + j].eval(x) + exprs[j * dim + i].eval(x)) * 0.5);
    return g;
  };
  return std::make_shared<RiemannianModel>(dim, std::move(fn), "weighted-riemannian");
}

MetricPtr make_generic(int dim, std::string_view expression) {
  return std::make_shared<GenericModel>(dim, expression);
}

MetricPtr make_function_metric(int dim, NormFunction f, std::string name) {
  return std::make_shared<FunctionModel>(dim, std::move(f), std::move(name));
}

MetricPtr reverse_metric(const MetricPtr& metric) { return metric->reversed_of(metric); }

}  // namespace finsler
