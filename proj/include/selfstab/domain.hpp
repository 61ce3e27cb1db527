#pragma once

#include "selfstab/expr.hpp"
#include "selfstab/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace selfstab {

enum class DomainKind { kInterval, kBall, kEllipse, kImplicit };

/// A bounded open region {g < 0} with boundary {g = 0}.
///
/// Interval, ball and ellipse carry a boundary parametrization: the side
/// (-1 or +1) for intervals, the angle for 2D balls and ellipses (the
/// parametric angle theta of c + (a1 cos theta, a2 sin theta)), and the
/// azimuth for 3D balls. Implicit domains rely on user-supplied boundary
/// samples.
class Domain {
 public:
  static Domain interval(double a, double b);
  static Domain ball(Vec center, double radius);
  static Domain ellipse(Vec center, Vec semi_axes);
  /// g must be negative inside; boundary_points are used for scans and
  /// their parameter is the index into this list.
  static Domain implicit(expr::Expression level, std::vector<Vec> boundary_points, Box bounds);

  DomainKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(center_.size()); }

  double level(const Vec& x) const;
  bool contains(const Vec& x) const { return level(x) < 0.0; }
  Vec level_gradient(const Vec& x) const;

  bool has_parametrization() const { return kind_ != DomainKind::kImplicit; }
  /// Boundary point for a parameter (parametrized kinds in 1D/2D only).
  Vec boundary_point(double param) const;
  double boundary_param(const Vec& x) const;
  /// n roughly uniform boundary points (two for intervals).
  std::vector<Vec> boundary_samples(int n) const;
  /// Parameter range scanned by boundary searches; empty for 1D and implicit.
  std::optional<std::pair<double, double>> param_range() const;

  /// Characteristic length (half-width, radius, largest semi-axis, or half the
  /// bounding-box diameter).
  double scale() const;
  Box bounding_box() const;
  const Vec& center() const { return center_; }
  const Vec& semi_axes() const { return axes_; }
  std::string describe() const;

  /// The first point on the boundary along the segment from `inside` to
  /// `outside`, located by bisection on g. Runs at least min_steps halvings
  /// and continues until |g| <= level_tol (at most 60). Returns the segment
  /// fraction in `fraction`.
  Vec locate_crossing(const Vec& inside, const Vec& outside, double& fraction,
                      int min_steps = 8, double level_tol = 1e-9) const;

 private:
  Domain() = default;

  DomainKind kind_ = DomainKind::kInterval;
  Vec center_;
  Vec axes_;  // half-width / radius / semi-axes
  std::optional<expr::Expression> level_;
  std::vector<Vec> boundary_points_;
  Box bounds_;
};

}  // namespace selfstab
