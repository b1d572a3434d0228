#include "finsler/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace finsler {

// ---------------------------------------------------------------- Jet algebra

Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  r.g = a.g * b.v + b.g * a.v;
  r.h = a.h * b.v + b.h * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  const double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

Jet operator-(const Jet& a) {
  Jet r;
  r.v = -a.v;
  r.g = -a.g;
  r.h = -a.h;
  return r;
}

Jet operator+(const Jet& a, double c) {
  Jet r = a;
  r.v += c;
  return r;
}

Jet operator*(const Jet& a, double c) {
  Jet r;
  r.v = a.v * c;
  r.g = a.g * c;
  r.h = a.h * c;
  return r;
}

Jet operator*(double c, const Jet& a) { return a * c; }
Jet operator-(const Jet& a, double c) { return a + (-c); }
Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }
Jet operator+(double c, const Jet& a) { return a + c; }
Jet operator-(double c, const Jet& a) { return -a + c; }
Jet operator/(double c, const Jet& a) {
  const double inv = 1.0 / a.v;
  return chain(a, c * inv, -c * inv * inv, 2.0 * c * inv * inv * inv);
}

Jet chain(const Jet& a, double f, double df, double d2f) {
  Jet r;
  r.v = f;
  r.g = a.g * df;
  r.h = a.h * df + (a.g * a.g.transpose()) * d2f;
  return r;
}

Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

Jet log(const Jet& a) { return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }

Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

Jet sin(const Jet& a) {
  const double s = std::sin(a.v);
  return chain(a, s, std::cos(a.v), -s);
}

Jet cos(const Jet& a) {
  const double c = std::cos(a.v);
  return chain(a, c, -std::sin(a.v), -c);
}

Jet sinh(const Jet& a) {
  const double s = std::sinh(a.v);
  return chain(a, s, std::cosh(a.v), s);
}

Jet cosh(const Jet& a) {
  const double c = std::cosh(a.v);
  return chain(a, c, std::sinh(a.v), c);
}

Jet tanh(const Jet& a) {
  const double t = std::tanh(a.v);
  const double d = 1.0 - t * t;
  return chain(a, t, d, -2.0 * t * d);
}

Jet abs(const Jet& a) {
  const double s = a.v < 0.0 ? -1.0 : 1.0;
  return chain(a, std::abs(a.v), s, 0.0);
}

Jet pow(const Jet& a, double c) {
  if (c == 0.0) return Jet(1.0, a.size());
  if (c == 1.0) return a;
  if (c == 2.0) return a * a;
  const double f = std::pow(a.v, c);
  const double df = c * std::pow(a.v, c - 1.0);
  const double d2f = c * (c - 1.0) * std::pow(a.v, c - 2.0);
  return chain(a, f, df, d2f);
}

Jet pow(const Jet& a, const Jet& b) {
  if (b.g.isZero(0.0) && b.h.isZero(0.0)) return pow(a, b.v);
  return exp(b * log(a));
}

// ---------------------------------------------------------------- parser

namespace {

enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Func, Norm };
enum class Func { Exp, Log, Sqrt, Sin, Cos, Sinh, Cosh, Tanh, Abs };

}  // namespace

struct Expression::Node {
  Kind kind = Kind::Const;
  Func func = Func::Exp;
  double value = 0.0;
  int var = -1;
  std::vector<int> args;
};

namespace {

class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> vars, std::vector<Expression::Node>& nodes)
      : src_(src), vars_(vars), nodes_(nodes) {}

  int parse() {
    const int root = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError,
                msg + " at offset " + std::to_string(pos_) + " in \"" + std::string(src_) + "\"");
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Expression::Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(Kind k, int a, int b) {
    Expression::Node n;
    n.kind = k;
    n.args = {a, b};
    return add(std::move(n));
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Kind::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary(Kind::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Kind::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(Kind::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) {
      Expression::Node n;
      n.kind = Kind::Neg;
      n.args = {parse_unary()};
      return add(std::move(n));
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    const int base = parse_atom();
    if (accept('^')) return binary(Kind::Pow, base, parse_unary());
    return base;
  }

  int parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  int parse_number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    Expression::Node n;
    n.kind = Kind::Const;
    n.value = v;
    return add(std::move(n));
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      ++pos_;
      std::vector<int> args;
      if (!accept(')')) {
        do {
          args.push_back(parse_sum());
        } while (accept(','));
        if (!accept(')')) fail("expected ')' after arguments of " + name);
      }
      Expression::Node n;
      if (name == "norm") {
        if (args.empty()) fail("norm() needs at least one argument");
        n.kind = Kind::Norm;
        n.args = std::move(args);
        return add(std::move(n));
      }
      static const std::pair<const char*, Func> table[] = {
          {"exp", Func::Exp},   {"log", Func::Log},   {"sqrt", Func::Sqrt},
          {"sin", Func::Sin},   {"cos", Func::Cos},   {"sinh", Func::Sinh},
          {"cosh", Func::Cosh}, {"tanh", Func::Tanh}, {"abs", Func::Abs},
      };
      for (const auto& [fname, f] : table) {
        if (name == fname) {
          if (args.size() != 1) fail(name + "() takes one argument");
          n.kind = Kind::Func;
          n.func = f;
          n.args = std::move(args);
          return add(std::move(n));
        }
      }
      fail("unknown function '" + name + "'");
    }

    if (name == "pi") {
      Expression::Node n;
      n.kind = Kind::Const;
      n.value = std::numbers::pi;
      return add(std::move(n));
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) {
        Expression::Node n;
        n.kind = Kind::Var;
        n.var = static_cast<int>(i);
        return add(std::move(n));
      }
    }
    fail("unknown variable '" + name + "'");
  }

  std::string_view src_;
  std::span<const std::string> vars_;
  std::vector<Expression::Node>& nodes_;
  std::size_t pos_ = 0;
};

template <class T>
T apply(Func f, const T& a) {
  using std::abs, std::cos, std::cosh, std::exp, std::log, std::sin, std::sinh, std::sqrt,
      std::tanh;
  switch (f) {
    case Func::Exp: return exp(a);
    case Func::Log: return log(a);
    case Func::Sqrt: return sqrt(a);
    case Func::Sin: return sin(a);
    case Func::Cos: return cos(a);
    case Func::Sinh: return sinh(a);
    case Func::Cosh: return cosh(a);
    case Func::Tanh: return tanh(a);
    case Func::Abs: return abs(a);
  }
  return a;
}

double constant(double v, std::span<const double>) { return v; }
Jet constant(double v, std::span<const Jet> args) {
  return Jet(v, args.empty() ? 0 : args.front().size());
}

double power(double a, double b) { return std::pow(a, b); }
Jet power(const Jet& a, const Jet& b) { return pow(a, b); }

template <class T>
T evaluate(const std::vector<Expression::Node>& nodes, int idx, std::span<const T> args) {
  const Expression::Node& n = nodes[static_cast<std::size_t>(idx)];
  switch (n.kind) {
    case Kind::Const: return constant(n.value, args);
    case Kind::Var: return args[static_cast<std::size_t>(n.var)];
    case Kind::Add: return evaluate(nodes, n.args[0], args) + evaluate(nodes, n.args[1], args);
    case Kind::Sub: return evaluate(nodes, n.args[0], args) - evaluate(nodes, n.args[1], args);
    case Kind::Mul: return evaluate(nodes, n.args[0], args) * evaluate(nodes, n.args[1], args);
    case Kind::Div: return evaluate(nodes, n.args[0], args) / evaluate(nodes, n.args[1], args);
    case Kind::Pow: return power(evaluate(nodes, n.args[0], args), evaluate(nodes, n.args[1], args));
    case Kind::Neg: return -evaluate(nodes, n.args[0], args);
    case Kind::Func: return apply(n.func, evaluate(nodes, n.args[0], args));
    case Kind::Norm: {
      T sum = evaluate(nodes, n.args[0], args);
      sum = sum * sum;
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        T a = evaluate(nodes, n.args[i], args);
        sum = sum + a * a;
      }
      using std::sqrt;
      return sqrt(sum);
    }
  }
  return constant(0.0, args);
}

bool reads(const std::vector<Expression::Node>& nodes, int idx, int var) {
  const Expression::Node& n = nodes[static_cast<std::size_t>(idx)];
  if (n.kind == Kind::Var) return n.var == var;
  for (int a : n.args)
    if (reads(nodes, a, var)) return true;
  return false;
}

}  // namespace

Expression Expression::parse(std::string_view source, std::span<const std::string> variables) {
  auto nodes = std::make_shared<std::vector<Node>>();
  Parser p(source, variables, *nodes);
  Expression e;
  e.root_ = p.parse();
  e.source_ = std::string(source);
  e.nodes_ = std::move(nodes);
  return e;
}

double Expression::operator()(std::span<const double> args) const {
  return evaluate<double>(*nodes_, root_, args);
}

Jet Expression::eval(std::span<const Jet> args) const { return evaluate<Jet>(*nodes_, root_, args); }

bool Expression::depends_on(int variable) const { return reads(*nodes_, root_, variable); }

std::vector<std::string> chart_variables(int dim, bool with_fiber) {
  std::vector<std::string> names;
  for (int i = 1; i <= dim; ++i) names.push_back("x" + std::to_string(i));
  if (with_fiber)
    for (int i = 1; i <= dim; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

}  // namespace finsler
