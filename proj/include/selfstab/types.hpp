#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace selfstab {

// State spaces are at most three-dimensional. Capped dynamic sizes keep
// every point on the stack, which matters inside the Euler loops.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim,
                          kMaxDim>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& message) : Error("precondition", message) {}
};

/// The model violates a structural assumption (dissipativity, gradient form, ...).
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& message) : Error("model", message) {}
};

/// A trajectory left the divergence bound.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& message) : Error("divergence", message) {}
};

/// An iterative method ran out of budget.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& message) : Error("convergence", message) {}
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Vec zeros(int dim) { return Vec::Zero(dim); }

/// Axis-aligned box [lo, hi].
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  Vec center() const { return 0.5 * (lo + hi); }
  /// Largest distance between two points of the box.
  double diameter() const { return (hi - lo).norm(); }
  /// Largest norm attained on the box.
  double max_norm() const { return lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm(); }

  static Box cube(int dim, double half_width) {
    return Box{Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
  }
};

std::string format_point(const Vec& x);

/// Shortest decimal text that reads back to the same double ("nan", "inf"
/// for non-finite values).
std::string format_number(double x);

}  // namespace selfstab
