#include "selfstab/sde.hpp"

#include <cmath>
#include <sstream>

namespace selfstab {

std::string to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::kClassical:
      return "classical";
    case ModeKind::kParticle:
      return "particle";
    case ModeKind::kFrozen:
      return "frozen";
    case ModeKind::kLimiting:
      return "limiting";
    case ModeKind::kTracking:
      return "tracking";
  }
  return "?";
}

ModeKind mode_from_string(std::string_view name) {
  for (ModeKind k : {ModeKind::kClassical, ModeKind::kParticle, ModeKind::kFrozen,
                     ModeKind::kLimiting, ModeKind::kTracking}) {
    if (to_string(k) == name) return k;
  }
  throw PreconditionError("unknown simulation mode '" + std::string(name) +
                          "' (expected classical, particle, frozen, limiting or tracking)");
}

SimulationMode SimulationMode::classical() { return {}; }

SimulationMode SimulationMode::particle(int n) {
  SimulationMode m;
  m.kind = ModeKind::kParticle;
  m.n_particles = n;
  return m;
}

SimulationMode SimulationMode::frozen(std::shared_ptr<const DriftField> field, double offset) {
  SimulationMode m;
  m.kind = ModeKind::kFrozen;
  m.field = std::move(field);
  m.offset = offset;
  return m;
}

SimulationMode SimulationMode::limiting(Vec x_stable) {
  SimulationMode m;
  m.kind = ModeKind::kLimiting;
  m.x_stable = std::move(x_stable);
  return m;
}

SimulationMode SimulationMode::tracking(const ModelSpec& model, Vec x0, double offset,
                                        double horizon, double dt) {
  SimulationMode m;
  m.kind = ModeKind::kTracking;
  m.offset = offset;
  m.flow = std::make_shared<const PathSample>(integrate_flow(model, x0, offset + horizon, dt));
  m.x0 = std::move(x0);
  return m;
}

void SimulationMode::validate(int dim) const {
  switch (kind) {
    case ModeKind::kClassical:
      return;
    case ModeKind::kParticle:
      if (n_particles < 1) throw PreconditionError("particle mode needs N >= 1");
      return;
    case ModeKind::kFrozen:
      if (!field) throw PreconditionError("frozen mode needs a drift field");
      if (field->dim() != dim) throw PreconditionError("drift field dimension mismatch");
      if (offset < 0) throw PreconditionError("frozen mode needs a nonnegative offset");
      return;
    case ModeKind::kLimiting:
      if (x_stable.size() != dim) throw PreconditionError("limiting mode needs x_stable");
      return;
    case ModeKind::kTracking:
      if (!flow) throw PreconditionError("tracking mode needs the flow psi(x0)");
      return;
  }
}

EulerMaruyama::EulerMaruyama(const ModelSpec& model, const SimulationMode& mode, double epsilon,
                             const NoisePlan& noise, std::uint64_t trial, const Vec& x_init,
                             double divergence_bound)
    : model_(model),
      mode_(mode),
      noise_(noise),
      trial_(trial),
      dt_(noise.dt()),
      scale_(std::sqrt(epsilon)),
      bound_(divergence_bound) {
  if (epsilon < 0) throw PreconditionError("epsilon must be nonnegative");
  if (x_init.size() != model.dim()) throw PreconditionError("initial state dimension mismatch");
  mode.validate(model.dim());
  const int n = mode.kind == ModeKind::kParticle ? mode.n_particles : 1;
  states_.assign(n, x_init);
  next_.assign(n, x_init);
}

Vec EulerMaruyama::interaction_drift(int particle, double t) const {
  const Vec& x = states_[particle];
  switch (mode_.kind) {
    case ModeKind::kClassical:
      return Vec::Zero(x.size());
    case ModeKind::kParticle: {
      const RadialProfile& phi = model_.profile();
      const auto n = static_cast<double>(states_.size());
      if (phi.is_zero() || states_.size() == 1) return Vec::Zero(x.size());
      Vec acc = Vec::Zero(x.size());
      for (const Vec& y : states_) acc += interaction_force(phi, Vec(x - y));
      return acc / n;
    }
    case ModeKind::kFrozen:
      return mode_.field->eval(t + mode_.offset, x);
    case ModeKind::kLimiting:
      return interaction_force(model_, Vec(x - mode_.x_stable));
    case ModeKind::kTracking:
      return interaction_force(model_, Vec(x - mode_.flow->at(t + mode_.offset)));
  }
  return Vec();
}

void EulerMaruyama::step() {
  const double t = time();
  const int n = static_cast<int>(states_.size());
  const int d = model_.dim();
  // Linear interaction in particle mode: (1/N) sum_j c (x - x_j) = c (x - mean).
  const bool linear_mean_field = mode_.kind == ModeKind::kParticle && n > 1 &&
                                 model_.profile().is_linear();
  Vec mean;
  if (linear_mean_field) {
    mean = Vec::Zero(d);
    for (const Vec& y : states_) mean += y;
    mean /= n;
  }
  Vec dw(d);
  for (int i = 0; i < n; ++i) {
    const Vec& x = states_[i];
    Vec drift = model_.drift(x);
    if (linear_mean_field) {
      drift -= model_.profile().linear_slope() * (x - mean);
    } else {
      drift -= interaction_drift(i, t);
    }
    Vec& y = next_[i];
    y = x + drift * dt_;
    if (scale_ > 0) {
      noise_.increment(trial_, static_cast<std::uint32_t>(i), steps_, d, dw);
      y += scale_ * dw;
    }
    if (!y.allFinite() || y.norm() > bound_) {
      std::ostringstream msg;
      msg << to_string(mode_.kind) << " trial " << trial_ << " (seed " << noise_.base_seed()
          << "), particle " << i << " left the divergence bound " << bound_ << " at t = " << t + dt_;
      throw DivergenceError(msg.str());
    }
  }
  states_.swap(next_);
  ++steps_;
}

std::vector<PathSample> simulate(const ModelSpec& model, const SimulationMode& mode,
                                 const Vec& x_init, double epsilon, double horizon,
                                 const NoisePlan& noise, std::uint64_t trial) {
  const std::size_t n = step_count(horizon, noise.dt());
  if (mode.kind == ModeKind::kFrozen &&
      horizon + mode.offset > mode.field->grid().horizon * (1 + 1e-12)) {
    throw PreconditionError("frozen mode: T + s exceeds the drift field horizon");
  }
  if (mode.kind == ModeKind::kTracking &&
      static_cast<double>(n) * noise.dt() + mode.offset > mode.flow->horizon() * (1 + 1e-12)) {
    throw PreconditionError("tracking mode: T + s exceeds the cached flow horizon");
  }
  EulerMaruyama em(model, mode, epsilon, noise, trial, x_init);
  std::vector<PathSample> paths(em.states().size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    paths[p].dt = noise.dt();
    paths[p].states.reserve(n + 1);
    paths[p].states.push_back(x_init);
  }
  for (std::size_t k = 0; k < n; ++k) {
    em.step();
    for (std::size_t p = 0; p < paths.size(); ++p) paths[p].states.push_back(em.state(static_cast<int>(p)));
  }
  return paths;
}

MomentCurve empirical_moment(const std::vector<PathSample>& paths, const PathSample& reference,
                             int order) {
  if (order < 2 || order % 2 != 0) throw PreconditionError("moment order must be even and >= 2");
  if (paths.empty()) throw PreconditionError("no paths given");
  for (const auto& p : paths) {
    if (p.states.size() != reference.states.size() || std::abs(p.dt - reference.dt) > 1e-12 * reference.dt ||
        std::abs(p.t0 - reference.t0) > 1e-12) {
      throw PreconditionError("path grid does not match the reference grid");
    }
  }
  MomentCurve curve;
  const auto m = static_cast<double>(paths.size());
  for (std::size_t k = 0; k < reference.states.size(); ++k) {
    double sum = 0, sum_sq = 0;
    for (const auto& p : paths) {
      const double v = std::pow((p.states[k] - reference.states[k]).squaredNorm(), order / 2);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / m;
    const double var = paths.size() > 1 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1)) : 0.0;
    curve.times.push_back(reference.time(k));
    curve.mean.push_back(mean);
    curve.stderr_.push_back(std::sqrt(var / m));
  }
  return curve;
}

MomentBoundReport moment_bound_check(const DissipativityConstants& constants,
                                     const MomentCurve& curve, double epsilon, int dim,
                                     bool global_convexity, const MomentBoundOptions& options) {
  MomentBoundReport r;
  r.uniform_bound_checked = global_convexity;
  r.uniform_bound = global_convexity ? epsilon * dim / (2.0 * constants.k_convex) : 0.0;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    const double t = curve.times[k];
    const double m = curve.mean[k];
    const double noise = options.n_stderr * curve.stderr_[k];
    const double curve_bound = epsilon * t * dim * std::exp(2.0 * constants.k_upper * t);
    const double allowance = curve_bound * (1 + options.slack) + noise;
    bool bad = false;
    if (m > allowance) {
      r.curve_bound_ok = false;
      bad = true;
    }
    if (allowance > 0) r.worst_curve_ratio = std::max(r.worst_curve_ratio, m / allowance);
    if (global_convexity) {
      const double uniform = r.uniform_bound * (1 + options.slack) + noise;
      if (m > uniform) {
        r.uniform_bound_ok = false;
        bad = true;
      }
      if (uniform > 0) r.worst_uniform_ratio = std::max(r.worst_uniform_ratio, m / uniform);
    }
    if (bad) r.violation_times.push_back(t);
  }
  r.passed = r.curve_bound_ok && r.uniform_bound_ok;
  return r;
}

}  // namespace selfstab
