#pragma once

#include "selfstab/domain.hpp"
#include "selfstab/flow.hpp"
#include "selfstab/model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace selfstab {

enum class ActionVariant { kClassical, kLimiting, kTracking };

std::string to_string(ActionVariant variant);

/// Which rate function to evaluate: the effective drift is
///   classical  F(t, x) = V(x)
///   limiting   F(t, x) = V(x) - Phi(x - x_stable)
///   tracking   F(t, x) = V(x) - Phi(x - psi_{t+s}(x0))
/// and the action of a path f on [0, T] is 1/2 int |f' - F(t, f)|^2 dt.
struct ActionSpec {
  ModelSpec model;
  ActionVariant variant = ActionVariant::kClassical;
  Vec x_stable;
  double offset = 0.0;
  Vec x0;
  std::shared_ptr<const PathSample> flow;

  static ActionSpec classical(ModelSpec model);
  static ActionSpec limiting(ModelSpec model, Vec x_stable);
  /// Caches psi(x0) on [0, offset + horizon].
  static ActionSpec tracking(ModelSpec model, Vec x0, double offset, double horizon,
                             double dt = 1e-3);

  Vec drift(double t, const Vec& x) const;
  Mat drift_jacobian(double t, const Vec& x) const;
};

/// Path on the uniform grid t_k = k T / n, k = 0..n, with pinned endpoints.
struct DiscretePath {
  Vec y;
  Vec z;
  std::vector<Vec> interior;  // n - 1 free nodes
  double horizon = 1.0;

  int intervals() const { return static_cast<int>(interior.size()) + 1; }
  double step() const { return horizon / intervals(); }
  const Vec& node(int k) const;
  /// Straight line from y to z with n intervals.
  static DiscretePath straight(const Vec& y, const Vec& z, double horizon, int n);
  PathSample to_path_sample() const;
};

/// Midpoint rule: 1/2 sum_k |(x_{k+1} - x_k)/h - F(t_{k+1/2}, (x_k + x_{k+1})/2)|^2 h.
double action(const ActionSpec& spec, const DiscretePath& path);

/// Exact gradient of the discrete action with respect to the interior nodes.
std::vector<Vec> action_gradient(const ActionSpec& spec, const DiscretePath& path);

struct MinimizeOptions {
  int multistart = 3;          // perturbed restarts besides the straight line
  std::uint64_t seed = 1;
  double perturbation = 0.1;   // times |z - y|
  int max_iterations = 20000;
  double gradient_tol = 1e-8;  // max-norm of the gradient
  int lbfgs_rank = 20;
};

struct CostResult {
  double value = 0.0;
  DiscretePath path;
  double gradient_norm = 0.0;
  bool converged = false;  // false: stalled, see gradient_norm
  int iterations = 0;
};

/// C(y, z, T): minimal discrete action over paths from y to z on [0, T].
/// Starts from the straight line (or `initial`) plus `multistart` Gaussian
/// perturbations and keeps the best.
CostResult minimize_cost(const ActionSpec& spec, const Vec& y, const Vec& z, double horizon,
                         int n_nodes, const MinimizeOptions& options = {},
                         const std::optional<DiscretePath>& initial = {});

struct QuasipotentialOptions {
  MinimizeOptions minimize;
  int golden_iterations = 16;
};

struct QuasipotentialResult {
  double value = 0.0;
  double best_horizon = 0.0;
  DiscretePath path;
  bool interior_minimum = true;  // false when the best T is the largest grid value
  std::vector<std::pair<double, double>> evaluations;  // (T, cost)
};

/// Geometric grid with `count` values from lo to hi.
std::vector<double> geometric_grid(double lo, double hi, int count);

/// Q(y, z) = inf_T C(y, z, T): costs on the grid (warm-started, single
/// start), golden-section refinement in log T around the best grid value,
/// then multistart at the best T.
QuasipotentialResult quasipotential_numeric(const ActionSpec& spec, const Vec& y, const Vec& z,
                                            const std::vector<double>& horizons, int n_nodes,
                                            const QuasipotentialOptions& options = {});

/// 2 (U(z) - U(x_stable) + A(z - x_stable)); the classical variant drops A.
/// Throws ModelError for models without a potential.
double quasipotential_closed_form(const ModelSpec& model, const Vec& x_stable, const Vec& z,
                                  ActionVariant variant = ActionVariant::kLimiting);

struct BoundaryMinimum {
  double value = 0.0;
  std::vector<Vec> argmins;
  std::vector<double> params;
  std::vector<std::pair<double, double>> scan;  // (param, value)
};

/// Minimum of an evaluator over the domain boundary: dense scan, golden
/// refinement of every local minimum in the boundary parameter, and all
/// refined minima within value_tol (relative) of the best.
BoundaryMinimum boundary_min(const std::function<double(const Vec&)>& evaluate,
                             const Domain& domain, int n_scan = 360, double param_tol = 1e-12,
                             double value_tol = 1e-6);

}  // namespace selfstab
