#pragma once

#include "finsler/types.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace finsler {

// Second-order forward-mode value: f, df, d^2 f with respect to up to six
// independent variables (base point and fiber coordinates of a 3-d chart).
struct Jet {
  using Grad = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
  using Hess = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;

  double v = 0.0;
  Grad g;
  Hess h;

  Jet() = default;
  Jet(double value, int nvars) : v(value), g(Grad::Zero(nvars)), h(Hess::Zero(nvars, nvars)) {}

  static Jet variable(double value, int index, int nvars) {
    Jet j(value, nvars);
    j.g[index] = 1.0;
    return j;
  }
  int size() const { return static_cast<int>(g.size()); }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator+(const Jet& a, double c);
Jet operator*(const Jet& a, double c);
Jet operator*(double c, const Jet& a);
Jet operator-(const Jet& a, double c);
Jet operator/(const Jet& a, double c);
Jet operator+(double c, const Jet& a);
Jet operator-(double c, const Jet& a);
Jet operator/(double c, const Jet& a);

// Applies a scalar function given its first and second derivative at a.v.
Jet chain(const Jet& a, double f, double df, double d2f);

Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sqrt(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet sinh(const Jet& a);
Jet cosh(const Jet& a);
Jet tanh(const Jet& a);
Jet abs(const Jet& a);
Jet pow(const Jet& a, double c);
Jet pow(const Jet& a, const Jet& b);

/// Arithmetic expression over named variables, parsed once and evaluated
/// either on plain doubles or on Jets.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses,
/// numeric literals, the constant `pi`, and the functions exp, log, sqrt,
/// sin, cos, sinh, cosh, tanh, abs and norm(a, b, ...).
class Expression {
 public:
  /// `variables` lists the accepted identifiers; their position is the
  /// index into the argument span at evaluation time.
  static Expression parse(std::string_view source, std::span<const std::string> variables);

  double operator()(std::span<const double> args) const;
  Jet eval(std::span<const Jet> args) const;

  const std::string& source() const { return source_; }
  /// True when the expression reads the variable with the given index.
  bool depends_on(int variable) const;

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
};

/// Variable names x1..xn followed by y1..yn.
std::vector<std::string> chart_variables(int dim, bool with_fiber);

}  // namespace finsler
