#pragma once

#include "finsler/expression.hpp"
#include "finsler/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

// Norm of the form sqrt(yᵀAy) + bᵀy frozen at one base point. Every family
// with a Riemannian or Randers structure reduces to this pointwise, which lets
// the distance and spectral code use closed forms.
struct QuadLinear {
  Mat A;
  Vec b;

  double operator()(const Vec& y) const { return std::sqrt(y.dot(A * y)) + b.dot(y); }
};

class MetricModel {
 public:
  explicit MetricModel(int dim);
  virtual ~MetricModel() = default;

  int dim() const { return dim_; }
  virtual std::string family() const = 0;

  virtual double norm(const Vec& x, const Vec& y) const = 0;

  // F² as a second-order jet. Variables are y (n of them) or, with
  // `with_base`, (x, y) in that order.
  virtual Jet norm_sq_jet(const Vec& x, const Vec& y, bool with_base) const = 0;

  virtual bool x_independent() const { return false; }
  // True only when symmetry is structural (F(x,-y) = F(x,y) for all inputs).
  virtual bool reversible() const { return false; }
  virtual bool riemannian() const { return false; }

  virtual std::optional<QuadLinear> quadratic_linear(const Vec& x) const;

  // Metric matrix g(x) as jets in x, row-major; Riemannian families only.
  virtual std::vector<Jet> metric_matrix_jet(const Vec& x) const;

  // Reversal needs the original handle, so it lives here rather than as a
  // free function over a reference.
  virtual std::shared_ptr<const MetricModel> reversed_of(std::shared_ptr<const MetricModel> self) const;

 protected:
  void check_dim(const Vec& v) const;

 private:
  int dim_;
};

using MetricPtr = std::shared_ptr<const MetricModel>;

MetricPtr make_euclidean(int dim);

// F = sqrt(yᵀAy) + bᵀy with constant A, b; requires bᵀA⁻¹b < 1.
MetricPtr make_randers(const Mat& a, const Vec& b);

// F = Σ_k sqrt(yᵀA_k y) + bᵀy; strongly convex as soon as one term is
// positive definite. Requires |b|_{dual} < 1 relative to the first term.
MetricPtr make_minkowski_norm(std::vector<Mat> terms, const Vec& b);

// Named Riemannian charts:
//   hyperbolic-half-plane  g = I / x_n²                 (x_n > 0)
//   hyperbolic-normal      hyperbolic space in normal coordinates at 0
//   round-sphere           g = 4 I / (1 + |x|²)²       (stereographic)
MetricPtr make_riemannian_preset(std::string_view name, int dim);

// g(x) given entrywise (row-major n×n) as expressions in x1..xn.
MetricPtr make_riemannian_expr(int dim, const std::vector<std::string>& entries);

// F(x, y) as an expression in x1..xn, y1..yn; derivatives by forward-mode
// differentiation.
MetricPtr make_generic(int dim, std::string_view expression);

// F(x, y) as an opaque function; derivatives by central differences with
// steps proportional to |y| (fiber) and 1 + |x| (base).
using NormFunction = std::function<double(const Vec& x, const Vec& y)>;
MetricPtr make_function_metric(int dim, NormFunction f, std::string name = "function");

// (x, y) ↦ F(x, -y); reversing twice returns the original model.
MetricPtr reverse_metric(const MetricPtr& metric);

}  // namespace finsler
