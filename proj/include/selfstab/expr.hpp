#pragma once

#include "selfstab/types.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <memory>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace selfstab::expr {

// ---------------------------------------------------------------------------
// Forward-mode jets. Jet<double> carries a gradient, Jet<Jet<double>> a
// Hessian; nesting is how second directional derivatives are obtained.
// ---------------------------------------------------------------------------

template <class T>
struct Jet {
  T v{};
  std::array<T, kMaxDim> d{};
  int n = 0;
};

inline double primal(double x) { return x; }
template <class T>
double primal(const Jet<T>& x) {
  return primal(x.v);
}

template <class T>
Jet<T> chain(const Jet<T>& x, const T& value, const T& slope) {
  Jet<T> r;
  r.v = value;
  r.n = x.n;
  for (int i = 0; i < x.n; ++i) r.d[i] = slope * x.d[i];
  return r;
}

template <class T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v + b.v;
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < r.n; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}

template <class T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v - b.v;
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < r.n; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}

template <class T>
Jet<T> operator-(const Jet<T>& a) {
  Jet<T> r;
  r.v = -a.v;
  r.n = a.n;
  for (int i = 0; i < r.n; ++i) r.d[i] = -a.d[i];
  return r;
}

template <class T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v * b.v;
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < r.n; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}

template <class T>
Jet<T> operator*(double s, const Jet<T>& a) {
  Jet<T> r;
  r.v = s * a.v;
  r.n = a.n;
  for (int i = 0; i < r.n; ++i) r.d[i] = s * a.d[i];
  return r;
}

template <class T>
Jet<T> operator+(double s, const Jet<T>& a) {
  Jet<T> r = a;
  r.v = s + a.v;
  return r;
}

template <class T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  const T inv = 1.0 / b.v;
  Jet<T> r;
  r.v = a.v * inv;
  r.n = std::max(a.n, b.n);
  for (int i = 0; i < r.n; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}

template <class T>
Jet<T> operator/(double s, const Jet<T>& b) {
  const T inv = 1.0 / b.v;
  const T value = s * inv;
  return chain(b, value, -value * inv);
}

template <class T>
Jet<T> exp(const Jet<T>& x) {
  using std::exp;
  const T e = exp(x.v);
  return chain(x, e, e);
}

template <class T>
Jet<T> log(const Jet<T>& x) {
  using std::log;
  return chain(x, log(x.v), 1.0 / x.v);
}

template <class T>
Jet<T> sin(const Jet<T>& x) {
  using std::cos;
  using std::sin;
  return chain(x, sin(x.v), cos(x.v));
}

template <class T>
Jet<T> cos(const Jet<T>& x) {
  using std::cos;
  using std::sin;
  return chain(x, cos(x.v), -sin(x.v));
}

template <class T>
Jet<T> sqrt(const Jet<T>& x) {
  using std::sqrt;
  const T s = sqrt(x.v);
  return chain(x, s, 0.5 / s);
}

/// Embeds a real constant into a (possibly nested) jet type.
template <class T>
T lift(double value) {
  if constexpr (std::is_same_v<T, double>) {
    return value;
  } else {
    T r;
    r.v = lift<decltype(r.v)>(value);
    return r;
  }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class Op : std::uint8_t {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kPowInt,
  kNeg,
  kExp,
  kLog,
  kSin,
  kCos,
  kSqrt,
  kAbs,
  kMin,
  kMax,
  kSmoothstep,
};

struct Node {
  Op op = Op::kConst;
  std::array<int, 3> args{-1, -1, -1};
  double value = 0.0;  // literal, or the integer exponent for kPowInt
  int var = -1;
};

/// Positioned parse failure.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& message);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Evaluation outside the real domain of a subexpression (log of a
/// non-positive number, division by zero, ...).
class EvalDomainError : public Error {
 public:
  EvalDomainError(std::string subexpression, const std::string& message);
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

/// Immutable arithmetic expression over named variables.
///
/// Grammar (lowest to highest precedence): `+ -`, `* /`, unary `-`, `^`
/// (right associative). Calls: exp, log, sin, cos, sqrt, abs (one argument),
/// min, max (two), smoothstep(a, b, u) (three). `pi` is a named constant.
class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view source, std::vector<std::string> variables);

  std::size_t variable_count() const { return variables_.size(); }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::string& source() const { return source_; }
  bool empty() const { return nodes_ == nullptr; }

  /// Fully parenthesized text that parses back to the same function.
  std::string render() const;

  /// True when no variable appears in the expression.
  bool is_constant() const;

  /// Coefficients c0..cn when a one-variable expression is a polynomial of
  /// degree <= max_degree (constant subexpressions of any kind allowed).
  std::optional<std::vector<double>> polynomial_coefficients(int max_degree = 32) const;

  template <class T>
  T evaluate(std::span<const T> values) const;

  double operator()(std::span<const double> values) const { return evaluate<double>(values); }
  double operator()(const Vec& x) const;

 private:
  template <class T>
  T eval_node(int index, std::span<const T> values) const;
  std::string render_node(int index) const;
  friend double constant_subtree_value(const std::vector<Node>& nodes, int root);

  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
  std::vector<std::string> variables_;
  std::string source_;
};

/// Parses an expression in the variables x1..x<dim>.
Expression parse(std::string_view source, int dim);

/// Parses a radial profile in the single variable u.
Expression parse_profile(std::string_view source);

struct DualVector {
  double value = 0.0;
  std::vector<double> partials;
};

/// Value and exact gradient by forward-mode differentiation.
DualVector eval_gradient(const Expression& e, const Vec& x);

/// Value and gradient written into a caller-provided vector; no allocation.
double eval_gradient(const Expression& e, const Vec& x, Vec& gradient);

/// Second directional derivative <h, D(grad e)(x) h> by nested forward mode.
/// Requires |h| = 1 within 1e-9.
double eval_jacobian_action(const Expression& e, const Vec& x, const Vec& h);

/// Full Hessian of e at x.
Mat eval_hessian(const Expression& e, const Vec& x);

/// Derivative of a one-variable expression.
double eval_derivative(const Expression& e, double u);

extern template double Expression::evaluate<double>(std::span<const double>) const;
extern template Jet<double> Expression::evaluate<Jet<double>>(std::span<const Jet<double>>) const;
extern template Jet<Jet<double>> Expression::evaluate<Jet<Jet<double>>>(
    std::span<const Jet<Jet<double>>>) const;

}  // namespace selfstab::expr
