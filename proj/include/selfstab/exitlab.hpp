#pragma once

#include "selfstab/domain.hpp"
#include "selfstab/sde.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace selfstab {

/// One Monte-Carlo exit trial. Censored trials carry exit_time = horizon, the
/// state at the horizon and a NaN boundary_param.
struct ExitRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double exit_time = 0.0;
  Vec exit_point;
  double boundary_param = 0.0;
  bool censored = false;
};

struct ExitOptions {
  int workers = 1;
  double divergence_bound = kDefaultDivergenceBound;
  std::uint64_t first_trial = 0;  // trial indices are first_trial + j
};

/// Runs n_trials paths from x_init until the state (particle 0 in particle
/// mode) first leaves the domain, up to max_horizon. The crossing inside the
/// offending Euler step is located by bisection on the level function.
/// Results are ordered by trial and independent of the worker count.
std::vector<ExitRecord> run_exit_trials(const ModelSpec& model, const SimulationMode& mode,
                                        const Domain& domain, const Vec& x_init, double epsilon,
                                        int n_trials, double max_horizon, const NoisePlan& noise,
                                        const ExitOptions& options = {});

/// A named region of the boundary: exits within `radius` of `point`.
struct Neighborhood {
  std::string name;
  Vec point;
  double radius = 0.1;
};

struct ExitStatisticsOptions {
  int bins = 36;  // over the parameter range; intervals always use the two sides
  std::vector<Neighborhood> neighborhoods;
  /// Fraction of exits with e^{(Q - eta)/eps} < tau < e^{(Q + eta)/eps}.
  struct Window {
    double quasipotential;
    double eta;
    double epsilon;
  };
  std::optional<Window> window;
};

struct NeighborhoodFraction {
  std::string name;
  double fraction = 0.0;  // over all trials, censored included
  double stderr_ = 0.0;
};

struct ExitSummary {
  std::size_t n_trials = 0;
  std::size_t n_censored = 0;
  bool all_censored = false;  // warning: no exit observed, only lower bounds

  // Over exited trials.
  double mean_exit_time = 0.0;
  double stderr_ = 0.0;
  // Censored trials counted at their horizon: a lower bound on the true mean.
  double restricted_mean = 0.0;
  double restricted_stderr = 0.0;
  // Over all trials (censored ones are larger than every exit); NaN when at
  // least half the trials are censored.
  double median_exit_time = 0.0;
  double median_stderr = 0.0;

  std::vector<double> bin_edges;   // size bins + 1 (or {-1, +1} centers for intervals)
  std::vector<std::size_t> histogram;
  std::vector<NeighborhoodFraction> neighborhoods;
  std::optional<double> window_fraction;
  std::string note;
};

/// Summary statistics of a set of exit records. Throws PreconditionError on
/// empty input; an all-censored input yields a summary with all_censored set.
ExitSummary exit_statistics(const std::vector<ExitRecord>& records, const Domain& domain,
                            const ExitStatisticsOptions& options = {});

struct KramersPoint {
  double epsilon = 0.0;
  double mean_exit_time = 0.0;
  double stderr_ = 0.0;
  std::size_t n_trials = 0;
  std::size_t n_censored = 0;
};

struct KramersFit {
  double quasipotential = 0.0;  // slope of log E[tau] against 1/eps
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  bool weighted = false;
  std::vector<double> residuals;     // in log E[tau]
  std::vector<double> eps_log_mean;  // eps log E[tau] per point
  double weighted_rss = 0.0;
};

/// Weighted least squares of log(mean tau) against 1/eps with weights
/// (mean / stderr)^2; falls back to equal weights when any stderr is zero.
/// Needs at least three distinct epsilons and positive means.
KramersFit kramers_fit(const std::vector<KramersPoint>& series);

KramersPoint kramers_point(double epsilon, const ExitSummary& summary);

/// `trial,seed,exit_time,exit_x1..exit_xd,boundary_param,censored`
void write_exit_csv(std::ostream& out, const std::vector<ExitRecord>& records, int dim);
/// `epsilon,n_trials,n_censored,mean_exit_time,stderr,eps_log_mean`
void write_kramers_csv(std::ostream& out, const std::vector<KramersPoint>& series);
std::vector<KramersPoint> read_kramers_csv(std::istream& in);

}  // namespace selfstab
