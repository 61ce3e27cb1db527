#include "selfstab/domain.hpp"

#include "selfstab/sampling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace selfstab {

Domain Domain::interval(double a, double b) {
  if (!(a < b)) throw PreconditionError("interval domain needs a < b");
  Domain d;
  d.kind_ = DomainKind::kInterval;
  d.center_ = make_vec({0.5 * (a + b)});
  d.axes_ = make_vec({0.5 * (b - a)});
  return d;
}

Domain Domain::ball(Vec center, double radius) {
  if (!(radius > 0)) throw PreconditionError("ball domain needs a positive radius");
  if (center.size() < 1 || center.size() > kMaxDim) {
    throw PreconditionError("ball domain dimension must be 1..3");
  }
  Domain d;
  d.kind_ = center.size() == 1 ? DomainKind::kInterval : DomainKind::kBall;
  d.axes_ = Vec::Constant(center.size(), radius);
  d.center_ = std::move(center);
  return d;
}

Domain Domain::ellipse(Vec center, Vec semi_axes) {
  if (center.size() != 2 || semi_axes.size() != 2) {
    throw PreconditionError("ellipse domains are two-dimensional");
  }
  if ((semi_axes.array() <= 0).any()) throw PreconditionError("ellipse semi-axes must be positive");
  Domain d;
  d.kind_ = DomainKind::kEllipse;
  d.center_ = std::move(center);
  d.axes_ = std::move(semi_axes);
  return d;
}

Domain Domain::implicit(expr::Expression level, std::vector<Vec> boundary_points, Box bounds) {
  if (boundary_points.empty()) throw PreconditionError("implicit domain needs boundary samples");
  Domain d;
  d.kind_ = DomainKind::kImplicit;
  d.center_ = bounds.center();
  d.axes_ = 0.5 * (bounds.hi - bounds.lo);
  for (const Vec& p : boundary_points) {
    if (p.size() != d.center_.size()) {
      throw PreconditionError("boundary sample dimension does not match the domain");
    }
    if (std::abs(level(p)) > 1e-9) {
      throw PreconditionError("boundary sample " + format_point(p) + " has |g| > 1e-9");
    }
  }
  d.level_ = std::move(level);
  d.boundary_points_ = std::move(boundary_points);
  d.bounds_ = std::move(bounds);
  return d;
}

double Domain::level(const Vec& x) const {
  switch (kind_) {
    case DomainKind::kInterval:
      return std::abs(x(0) - center_(0)) - axes_(0);
    case DomainKind::kBall:
      return (x - center_).norm() - axes_(0);
    case DomainKind::kEllipse: {
      const Vec u = (x - center_).cwiseQuotient(axes_);
      return u.squaredNorm() - 1.0;
    }
    case DomainKind::kImplicit:
      return (*level_)(x);
  }
  return 0.0;
}

Vec Domain::level_gradient(const Vec& x) const {
  switch (kind_) {
    case DomainKind::kInterval:
      return make_vec({x(0) >= center_(0) ? 1.0 : -1.0});
    case DomainKind::kBall: {
      const Vec r = x - center_;
      const double n = r.norm();
      return n > 0 ? Vec(r / n) : Vec(Vec::Zero(r.size()));
    }
    case DomainKind::kEllipse:
      return 2.0 * (x - center_).cwiseQuotient(axes_.cwiseProduct(axes_));
    case DomainKind::kImplicit: {
      Vec g;
      expr::eval_gradient(*level_, x, g);
      return g;
    }
  }
  return Vec();
}

Vec Domain::boundary_point(double param) const {
  switch (kind_) {
    case DomainKind::kInterval:
      return make_vec({center_(0) + (param < 0 ? -axes_(0) : axes_(0))});
    case DomainKind::kBall:
    case DomainKind::kEllipse:
      if (dim() != 2) break;
      return center_ + make_vec({axes_(0) * std::cos(param), axes_(1) * std::sin(param)});
    case DomainKind::kImplicit: {
      const auto k = static_cast<std::size_t>(std::lround(param));
      if (param < 0 || k >= boundary_points_.size()) break;
      return boundary_points_[k];
    }
  }
  throw PreconditionError("boundary parameter " + std::to_string(param) +
                          " cannot be mapped for " + describe());
}

double Domain::boundary_param(const Vec& x) const {
  switch (kind_) {
    case DomainKind::kInterval:
      return x(0) < center_(0) ? -1.0 : 1.0;
    case DomainKind::kBall:
    case DomainKind::kEllipse: {
      const Vec u = (x - center_).cwiseQuotient(axes_);
      return std::atan2(u(1), u(0));
    }
    case DomainKind::kImplicit: {
      std::size_t best = 0;
      for (std::size_t k = 1; k < boundary_points_.size(); ++k) {
        if ((boundary_points_[k] - x).squaredNorm() < (boundary_points_[best] - x).squaredNorm()) {
          best = k;
        }
      }
      return static_cast<double>(best);
    }
  }
  return 0.0;
}

std::vector<Vec> Domain::boundary_samples(int n) const {
  switch (kind_) {
    case DomainKind::kInterval:
      return {boundary_point(-1.0), boundary_point(1.0)};
    case DomainKind::kBall:
      if (dim() == 3) return sphere_points(center_, axes_(0), n);
      [[fallthrough]];
    case DomainKind::kEllipse: {
      std::vector<Vec> points;
      points.reserve(n);
      for (int k = 0; k < n; ++k) {
        points.push_back(boundary_point(-std::numbers::pi + 2.0 * std::numbers::pi * k / n));
      }
      return points;
    }
    case DomainKind::kImplicit:
      return boundary_points_;
  }
  return {};
}

std::optional<std::pair<double, double>> Domain::param_range() const {
  if ((kind_ == DomainKind::kBall || kind_ == DomainKind::kEllipse) && dim() == 2) {
    return std::pair{-std::numbers::pi, std::numbers::pi};
  }
  return std::nullopt;
}

double Domain::scale() const {
  if (kind_ == DomainKind::kImplicit) return 0.5 * bounds_.diameter();
  return axes_.maxCoeff();
}

Box Domain::bounding_box() const {
  if (kind_ == DomainKind::kImplicit) return bounds_;
  return Box{center_ - axes_, center_ + axes_};
}

std::string Domain::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case DomainKind::kInterval:
      out << "interval(" << center_(0) - axes_(0) << ", " << center_(0) + axes_(0) << ")";
      break;
    case DomainKind::kBall:
      out << "ball(center=" << format_point(center_) << ", radius=" << axes_(0) << ")";
      break;
    case DomainKind::kEllipse:
      out << "ellipse(center=" << format_point(center_) << ", semi_axes=" << format_point(axes_)
          << ")";
      break;
    case DomainKind::kImplicit:
      out << "implicit(" << level_->source() << ")";
      break;
  }
  return out.str();
}

Vec Domain::locate_crossing(const Vec& inside, const Vec& outside, double& fraction,
                            int min_steps, double level_tol) const {
  double lo = 0.0;
  double hi = 1.0;
  Vec best = outside;
  double best_level = std::abs(level(outside));
  fraction = 1.0;
  for (int step = 0; step < 60; ++step) {
    if (step >= min_steps && best_level <= level_tol) break;
    const double mid = 0.5 * (lo + hi);
    const Vec x = inside + mid * (outside - inside);
    const double g = level(x);
    if (std::abs(g) < best_level) {
      best_level = std::abs(g);
      best = x;
      fraction = mid;
    }
    if (g < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

}  // namespace selfstab
