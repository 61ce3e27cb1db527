#include "selfstab/flow.hpp"

#include "selfstab/parallel.hpp"
#include "selfstab/sampling.hpp"

#include <cmath>
#include <sstream>

namespace selfstab {

Vec PathSample::at(double t) const {
  const double s = (t - t0) / dt;
  const double last = static_cast<double>(steps());
  if (s < -1e-9 || s > last + 1e-9) {
    std::ostringstream msg;
    msg << "time " << t << " outside path range [" << t0 << ", " << horizon() << "]";
    throw PreconditionError(msg.str());
  }
  if (s <= 0) return states.front();
  if (s >= last) return states.back();
  const auto k = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(k);
  return (1.0 - w) * states[k] + w * states[k + 1];
}

std::size_t step_count(double horizon, double dt) {
  if (!(horizon > 0) || !(dt > 0)) throw PreconditionError("horizon and dt must be positive");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
}

PathSample integrate_rk4(const std::function<Vec(const Vec&)>& field, const Vec& x0,
                         double horizon, double dt, double divergence_bound) {
  const std::size_t n = step_count(horizon, dt);
  PathSample path;
  path.dt = horizon / static_cast<double>(n);
  path.states.reserve(n + 1);
  path.states.push_back(x0);
  const double h = path.dt;
  Vec x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec k1 = field(x);
    const Vec k2 = field(x + 0.5 * h * k1);
    const Vec k3 = field(x + 0.5 * h * k2);
    const Vec k4 = field(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.norm() > divergence_bound) {
      std::ostringstream msg;
      msg << "flow from " << format_point(x0) << " left the divergence bound " << divergence_bound
          << " at t = " << path.time(k + 1) << "; the field is likely not dissipative";
      throw DivergenceError(msg.str());
    }
    path.states.push_back(x);
  }
  return path;
}

PathSample integrate_flow(const ModelSpec& model, const Vec& x0, double horizon, double dt,
                          double divergence_bound) {
  return integrate_rk4([&](const Vec& x) { return model.drift(x); }, x0, horizon, dt,
                       divergence_bound);
}

PathSample integrate_relaxed_flow(const ModelSpec& model, const Vec& x_stable, const Vec& y0,
                                  double horizon, double dt, double divergence_bound) {
  return integrate_rk4(
      [&](const Vec& x) { return Vec(model.drift(x) - interaction_force(model, x - x_stable)); },
      y0, horizon, dt, divergence_bound);
}

namespace {

// Damped Newton; returns true when |V| <= tol.
bool newton(const ModelSpec& model, Vec& x, const EquilibriumOptions& options, int& iterations) {
  Vec v = model.drift(x);
  for (iterations = 0; iterations < options.newton_iterations; ++iterations) {
    if (v.norm() <= options.tol) return true;
    const Mat jac = model.drift_jacobian(x);
    const auto qr = jac.colPivHouseholderQr();
    if (qr.rank() < jac.rows()) return false;
    const Vec step = qr.solve(v);
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      const Vec trial = x - lambda * step;
      const Vec vt = model.drift(trial);
      if (vt.allFinite() && vt.norm() < v.norm()) {
        x = trial;
        v = vt;
        improved = true;
        break;
      }
    }
    if (!improved) return v.norm() <= options.tol;
  }
  return v.norm() <= options.tol;
}

EquilibriumResult finish(const ModelSpec& model, const Vec& x, bool used_flow, int iterations) {
  EquilibriumResult r;
  r.point = x;
  r.residual = model.drift(x).norm();
  r.max_eigenvalue = max_symmetric_eigenvalue(model.drift_jacobian(x));
  r.stable = r.max_eigenvalue < 0.0;
  r.used_flow = used_flow;
  r.newton_iterations = iterations;
  return r;
}

}  // namespace

EquilibriumResult find_equilibrium(const ModelSpec& model, const Vec& guess,
                                   const EquilibriumOptions& options) {
  if (guess.size() != model.dim()) throw PreconditionError("guess dimension mismatch");
  Vec x = guess;
  int iterations = 0;
  std::optional<EquilibriumResult> unstable;
  if (newton(model, x, options, iterations)) {
    auto r = finish(model, x, false, iterations);
    if (r.stable) return r;
    unstable = r;
  }

  // Fallback: follow the flow until it settles, then polish.
  Vec y = guess;
  for (int chunk = 0; chunk < options.flow_chunks; ++chunk) {
    y = integrate_flow(model, y, options.flow_chunk, options.flow_dt).final_state();
    if (model.drift(y).norm() <= std::sqrt(options.tol)) break;
  }
  if (newton(model, y, options, iterations)) return finish(model, y, true, iterations);
  if (unstable) return *unstable;
  std::ostringstream msg;
  msg << "no equilibrium found from " << format_point(guess) << ": |V| = " << model.drift(y).norm()
      << " at " << format_point(y) << " after Newton and flow fallback";
  throw ConvergenceError(msg.str());
}

StabilityReport verify_domain_stability(const ModelSpec& model, const Domain& domain,
                                        const Vec& x_stable, const StabilityOptions& options) {
  if (domain.dim() != model.dim()) throw PreconditionError("domain dimension mismatch");
  if (!domain.contains(x_stable)) {
    throw PreconditionError("x_stable " + format_point(x_stable) + " is not inside " +
                            domain.describe());
  }
  const double offset = options.inward_offset.value_or(1e-3 * domain.scale());

  std::vector<Vec> starts;
  for (const Vec& p : domain.boundary_samples(options.n_boundary)) {
    const Vec normal = domain.level_gradient(p);
    Vec q = normal.norm() > 0 ? Vec(p - offset * normal.normalized()) : p;
    // Fall back to moving toward x_stable where the normal misleads.
    for (int k = 0; k < 60 && !domain.contains(q); ++k) q = 0.5 * (q + x_stable);
    starts.push_back(q);
  }
  const Box box = domain.bounding_box();
  for (std::uint64_t i = 0; static_cast<int>(starts.size()) <
                                 options.n_boundary + options.n_interior && i < 100000;
       ++i) {
    const Vec p = halton_point(box, i);
    if (domain.contains(p)) starts.push_back(p);
  }

  std::vector<std::optional<StabilityFailure>> outcome(starts.size());
  std::vector<double> final_distance(starts.size(), 0.0);
  parallel_for(starts.size(), options.workers, [&](std::size_t i) {
    const Vec& start = starts[i];
    PathSample path;
    try {
      path = integrate_relaxed_flow(model, x_stable, start, options.horizon, options.dt);
    } catch (const DivergenceError& e) {
      outcome[i] = StabilityFailure{start, e.what(), 0.0, start};
      return;
    }
    for (std::size_t k = 0; k < path.states.size(); ++k) {
      if (!domain.contains(path.states[k])) {
        outcome[i] = StabilityFailure{start, "left the domain", path.time(k), path.states[k]};
        return;
      }
    }
    final_distance[i] = (path.final_state() - x_stable).norm();
    if (final_distance[i] > options.tol) {
      outcome[i] = StabilityFailure{start, "did not reach the target ball", path.horizon(),
                                    path.final_state()};
    }
  });

  StabilityReport report;
  report.n_checked = static_cast<int>(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    report.worst_final_distance = std::max(report.worst_final_distance, final_distance[i]);
    if (outcome[i]) report.failures.push_back(*outcome[i]);
  }
  report.passed = report.failures.empty();
  return report;
}

}  // namespace selfstab
