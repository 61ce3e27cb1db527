#pragma once

#include "selfstab/drift.hpp"
#include "selfstab/flow.hpp"
#include "selfstab/model.hpp"
#include "selfstab/rng.hpp"

#include <memory>
#include <string>
#include <vector>

namespace selfstab {

enum class ModeKind { kClassical, kParticle, kFrozen, kLimiting, kTracking };

std::string to_string(ModeKind kind);
ModeKind mode_from_string(std::string_view name);

/// Which process to simulate, with its mode-specific parameters.
///
///   classical  dX = V(X) dt + sqrt(eps) dW
///   particle   dX^i = [V(X^i) - (1/N) sum_j Phi(X^i - X^j)] dt + sqrt(eps) dW^i
///   frozen     dX = [V(X) - b(t + s, X)] dt + sqrt(eps) dW    (tabulated b)
///   limiting   dX = [V(X) - Phi(X - x_stable)] dt + sqrt(eps) dW
///   tracking   dX = [V(X) - Phi(X - psi_{t+s}(x0))] dt + sqrt(eps) dW
struct SimulationMode {
  ModeKind kind = ModeKind::kClassical;
  int n_particles = 1;
  double offset = 0.0;  // s, for frozen and tracking
  Vec x_stable;
  Vec x0;
  std::shared_ptr<const DriftField> field;
  std::shared_ptr<const PathSample> flow;  // psi(x0), for tracking

  static SimulationMode classical();
  static SimulationMode particle(int n);
  static SimulationMode frozen(std::shared_ptr<const DriftField> field, double offset = 0.0);
  static SimulationMode limiting(Vec x_stable);
  /// Integrates psi(x0) on [0, offset + horizon] with step dt.
  static SimulationMode tracking(const ModelSpec& model, Vec x0, double offset, double horizon,
                                 double dt = 1e-3);

  /// Throws PreconditionError when required parameters are missing.
  void validate(int dim) const;
};

/// Euler-Maruyama stepper for one trial. Particle 0 is the tagged particle
/// in particle mode; all other modes carry a single state.
class EulerMaruyama {
 public:
  EulerMaruyama(const ModelSpec& model, const SimulationMode& mode, double epsilon,
                const NoisePlan& noise, std::uint64_t trial, const Vec& x_init,
                double divergence_bound = kDefaultDivergenceBound);

  /// Advances every particle by one step of size noise.dt().
  void step();

  double time() const { return static_cast<double>(steps_) * dt_; }
  std::uint64_t steps() const { return steps_; }
  const Vec& state(int particle = 0) const { return states_[particle]; }
  const std::vector<Vec>& states() const { return states_; }

 private:
  Vec interaction_drift(int particle, double t) const;

  const ModelSpec& model_;
  const SimulationMode& mode_;
  const NoisePlan& noise_;
  std::uint64_t trial_;
  double dt_;
  double scale_;
  double bound_;
  std::uint64_t steps_ = 0;
  std::vector<Vec> states_;
  std::vector<Vec> next_;
};

/// Simulates one trial on [0, T] with the NoisePlan's step; returns one path
/// per particle (a single path outside particle mode).
std::vector<PathSample> simulate(const ModelSpec& model, const SimulationMode& mode,
                                 const Vec& x_init, double epsilon, double horizon,
                                 const NoisePlan& noise, std::uint64_t trial);

struct MomentCurve {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> stderr_;  // standard error of the mean
};

/// Per-time sample mean of |X_t - reference_t|^order with standard errors.
MomentCurve empirical_moment(const std::vector<PathSample>& paths, const PathSample& reference,
                             int order);

struct MomentBoundOptions {
  double slack = 0.1;
  double n_stderr = 3.0;
};

struct MomentBoundReport {
  bool passed = true;
  bool curve_bound_ok = true;            // m(t) <= eps t d e^{2Kt}
  bool uniform_bound_checked = false;
  bool uniform_bound_ok = true;          // m(t) <= eps d / (2 K_V)
  double uniform_bound = 0.0;
  double worst_curve_ratio = 0.0;        // max over t of m(t) / allowance
  double worst_uniform_ratio = 0.0;
  std::vector<double> violation_times;
};

/// Checks a second-moment curve against eps t d e^{2Kt} and, under global
/// convexity, against eps d / (2 K_V). Each bound is relaxed by (1 + slack)
/// and n_stderr standard errors.
MomentBoundReport moment_bound_check(const DissipativityConstants& constants,
                                     const MomentCurve& curve, double epsilon, int dim,
                                     bool global_convexity, const MomentBoundOptions& options = {});

}  // namespace selfstab
