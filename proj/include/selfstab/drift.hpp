#pragma once

#include "selfstab/flow.hpp"
#include "selfstab/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace selfstab {

/// Time and space grid of a tabulated drift.
struct DriftGrid {
  double horizon = 1.0;  // T
  int time_steps = 100;  // intervals on [0, T]
  Box box;
  std::vector<int> nodes;  // nodes per axis, each >= 2

  int dim() const { return box.dim(); }
  double time_step() const { return horizon / time_steps; }
  int node_count() const;
};

/// b(t, x) tabulated on a uniform grid, with the generating ensemble's mean
/// per time for evaluation outside the box.
class DriftField {
 public:
  DriftField(DriftGrid grid, RadialProfile profile, int weight_order);

  const DriftGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  int time_count() const { return grid_.time_steps + 1; }
  int node_count() const { return node_count_; }
  double time(int k) const { return grid_.time_step() * k; }
  Vec node(int index) const;
  int weight_order() const { return weight_order_; }
  const RadialProfile& profile() const { return profile_; }

  Vec value(int time_index, int node_index) const;
  void set_value(int time_index, int node_index, const Vec& v);
  const Vec& ensemble_mean(int time_index) const { return means_[time_index]; }
  void set_ensemble_mean(int time_index, const Vec& m) { means_[time_index] = m; }

  /// Multilinear in space and linear in time inside the box; outside the box
  /// Phi(x - mean(t)) with the mean interpolated in time. Throws
  /// PreconditionError for t outside [0, T].
  Vec eval(double t, const Vec& x) const;

  /// Grid sup of |b| / (1 + |x|^(2q)); an under-approximation of the sup over R^d.
  double lambda_norm() const;

  /// Text table: '#' metadata lines, then `time_index,node_index,b1..bd`
  /// rows followed by `mean,time_index,m1..md` rows.
  void write(std::ostream& out) const;
  static DriftField read(std::istream& in);

 private:
  std::size_t offset(int time_index, int node_index) const;
  Vec interpolate_space(int time_index, const Vec& x) const;

  DriftGrid grid_;
  RadialProfile profile_;
  int weight_order_;
  int node_count_;
  std::vector<int> strides_;
  std::vector<double> values_;
  std::vector<Vec> means_;
};

/// Lambda-norm of the difference of two fields on the same grid.
double lambda_distance(const DriftField& a, const DriftField& b);

/// Default box: the flow's bounding box inflated by max(3 sqrt(eps T), 1).
Box default_drift_box(const PathSample& flow, double epsilon, double horizon);

/// Empirical law of X_t: M particles.
struct EnsembleSnapshot {
  double time = 0.0;
  std::vector<Vec> particles;
  Vec mean() const;
};

struct GammaOptions {
  double dt = 1e-3;  // Euler step; must divide the field's time step
  int workers = 1;
  double divergence_bound = kDefaultDivergenceBound;
  bool keep_snapshots = false;
};

struct GammaResult {
  DriftField field;
  std::vector<EnsembleSnapshot> snapshots;  // filled when keep_snapshots
};

/// Gamma b(t, x) = (1/M) sum_j Phi(x - X_t^j), where X^j solve
/// dX = [V(X) - b(t, X)] dt + sqrt(eps) dW from x0, j = 0..M-1, with trajectory
/// j driven by the noise stream (noise_seed, trial = j).
GammaResult gamma_apply(const ModelSpec& model, const DriftField& b, const Vec& x0,
                        double epsilon, int M, std::uint64_t noise_seed,
                        const GammaOptions& options = {});

/// b0(t, x) = Phi(x - psi_t(x0)) tabulated on the grid; the ensemble mean is psi_t.
DriftField limit_field(const ModelSpec& model, const Vec& x0, const DriftGrid& grid,
                       double dt = 1e-3);

struct PicardRecord {
  int iteration = 0;
  double increment = 0.0;  // Lambda-norm of b_{i+1} - b_i
  double ratio = 0.0;      // increment / previous increment (0 for the first)
  double lambda_norm = 0.0;
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 50;
  bool fresh_noise = false;  // reseed every iteration (bias diagnostics)
  GammaOptions gamma;
};

struct SolveResult {
  DriftField field;
  std::vector<PicardRecord> log;
  bool converged = false;
};

/// Picard iteration b_{i+1} = Gamma b_i from b0 = Phi(x - psi_t(x0)) with
/// common random numbers. Non-convergence is reported through `converged`
/// and the log, not thrown.
SolveResult solve_self_consistent_drift(const ModelSpec& model, const Vec& x0, double epsilon,
                                        const DriftGrid& grid, int M, std::uint64_t noise_seed,
                                        const SolveOptions& options = {});

/// Phi(x - psi_t(x0)) with psi integrated once to the cached horizon.
class LimitDrift {
 public:
  LimitDrift(const ModelSpec& model, const Vec& x0, double horizon, double dt = 1e-3);
  Vec operator()(double t, const Vec& x) const;
  const PathSample& flow() const { return flow_; }

 private:
  RadialProfile profile_;
  PathSample flow_;
};

}  // namespace selfstab
