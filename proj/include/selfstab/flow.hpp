#pragma once

#include "selfstab/domain.hpp"
#include "selfstab/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace selfstab {

/// A trajectory on the uniform grid t0, t0 + dt, ..., t0 + n dt.
struct PathSample {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<Vec> states;

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double horizon() const { return time(steps()); }
  const Vec& final_state() const { return states.back(); }
  /// Linear interpolation between grid states; t must lie in [t0, horizon].
  Vec at(double t) const;
};

inline constexpr double kDefaultDivergenceBound = 1e6;

/// Number of steps used for a horizon: ceil(T / dt) up to rounding, so the
/// effective step is T / n <= dt.
std::size_t step_count(double horizon, double dt);

/// Fixed-step RK4 for the autonomous ODE x' = f(x).
PathSample integrate_rk4(const std::function<Vec(const Vec&)>& field, const Vec& x0,
                         double horizon, double dt,
                         double divergence_bound = kDefaultDivergenceBound);

/// psi' = V(psi), psi_0 = x0.
PathSample integrate_flow(const ModelSpec& model, const Vec& x0, double horizon,
                          double dt = 1e-3, double divergence_bound = kDefaultDivergenceBound);

/// phi' = V(phi) - Phi(phi - x_stable), phi_0 = y0.
PathSample integrate_relaxed_flow(const ModelSpec& model, const Vec& x_stable, const Vec& y0,
                                  double horizon, double dt = 1e-3,
                                  double divergence_bound = kDefaultDivergenceBound);

struct EquilibriumOptions {
  double tol = 1e-10;
  int newton_iterations = 100;
  double flow_chunk = 10.0;  // horizon of one fallback integration
  int flow_chunks = 100;
  double flow_dt = 1e-2;
};

struct EquilibriumResult {
  Vec point;
  double residual = 0.0;        // |V(point)|
  double max_eigenvalue = 0.0;  // top eigenvalue of sym DV(point)
  bool stable = false;
  bool used_flow = false;
  int newton_iterations = 0;
};

/// Damped Newton on V from the guess. If Newton stalls or lands on a zero
/// that is not attracting, integrates the flow from the guess and polishes
/// the end point with Newton. Throws ConvergenceError when neither reaches
/// |V| <= tol.
EquilibriumResult find_equilibrium(const ModelSpec& model, const Vec& guess,
                                   const EquilibriumOptions& options = {});

struct StabilityOptions {
  int n_boundary = 64;
  int n_interior = 64;
  double horizon = 20.0;
  double dt = 1e-3;
  double tol = 1e-2;                         // radius of the target ball around x_stable
  std::optional<double> inward_offset;  // default 1e-3 * domain scale
  int workers = 1;
};

struct StabilityFailure {
  Vec start;
  std::string reason;
  double time = 0.0;
  Vec point;
};

struct StabilityReport {
  bool passed = true;
  int n_checked = 0;
  double worst_final_distance = 0.0;
  std::vector<StabilityFailure> failures;
};

/// Integrates the relaxed flow from points just inside the boundary and from
/// a Halton sample of the interior; every trajectory must stay in D and end
/// within tol of x_stable.
StabilityReport verify_domain_stability(const ModelSpec& model, const Domain& domain,
                                        const Vec& x_stable,
                                        const StabilityOptions& options = {});

}  // namespace selfstab
