#include "selfstab/exitlab.hpp"

#include "selfstab/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace selfstab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExitRecord run_one(const ModelSpec& model, const SimulationMode& mode, const Domain& domain,
                   const Vec& x_init, double epsilon, std::size_t n_steps, double max_horizon,
                   const NoisePlan& noise, std::uint64_t trial, double bound) {
  EulerMaruyama em(model, mode, epsilon, noise, trial, x_init, bound);
  ExitRecord r;
  r.trial = trial;
  r.seed = noise.base_seed();
  Vec previous = x_init;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = em.time();
    em.step();
    const Vec& x = em.state(0);
    if (!domain.contains(x)) {
      double fraction = 1.0;
      r.exit_point = domain.locate_crossing(previous, x, fraction);
      r.exit_time = std::min(t + fraction * noise.dt(), max_horizon);
      r.boundary_param = domain.boundary_param(r.exit_point);
      return r;
    }
    previous = x;
  }
  r.censored = true;
  r.exit_time = max_horizon;
  r.exit_point = em.state(0);
  r.boundary_param = kNaN;
  return r;
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {kNaN, kNaN};
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, kNaN};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, int line) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw PreconditionError("kramers CSV line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<ExitRecord> run_exit_trials(const ModelSpec& model, const SimulationMode& mode,
                                        const Domain& domain, const Vec& x_init, double epsilon,
                                        int n_trials, double max_horizon, const NoisePlan& noise,
                                        const ExitOptions& options) {
  if (domain.dim() != model.dim()) throw PreconditionError("domain dimension mismatch");
  if (!domain.contains(x_init)) throw PreconditionError("x_init " + format_point(x_init) + " is not inside the domain");
  if (!(max_horizon > 0)) throw PreconditionError("max_horizon must be positive");
  if (n_trials < 0) throw PreconditionError("n_trials must be nonnegative");
  mode.validate(model.dim());
  const std::size_t n_steps = step_count(max_horizon, noise.dt());
  const double reach = static_cast<double>(n_steps) * noise.dt();
  if (mode.kind == ModeKind::kFrozen && reach + mode.offset > mode.field->grid().horizon * (1 + 1e-12)) {
    throw PreconditionError("frozen mode: max_horizon + s exceeds the drift field horizon");
  }
  if (mode.kind == ModeKind::kTracking && reach + mode.offset > mode.flow->horizon() * (1 + 1e-12)) {
    throw PreconditionError("tracking mode: max_horizon + s exceeds the cached flow horizon");
  }
  std::vector<ExitRecord> records(static_cast<std::size_t>(n_trials));
  parallel_for(records.size(), options.workers, [&](std::size_t j) {
    records[j] = run_one(model, mode, domain, x_init, epsilon, n_steps, max_horizon, noise,
                         options.first_trial + j, options.divergence_bound);
  });
  return records;
}

ExitSummary exit_statistics(const std::vector<ExitRecord>& records, const Domain& domain,
                            const ExitStatisticsOptions& options) {
  if (records.empty()) throw PreconditionError("exit_statistics: no records");
  ExitSummary s;
  s.n_trials = records.size();
  std::vector<double> exited, all;
  for (const auto& r : records) {
    all.push_back(r.exit_time);
    if (r.censored) {
      ++s.n_censored;
    } else {
      exited.push_back(r.exit_time);
    }
  }
  s.all_censored = exited.empty();
  std::tie(s.mean_exit_time, s.stderr_) = mean_and_stderr(exited);
  std::tie(s.restricted_mean, s.restricted_stderr) = mean_and_stderr(all);

  // Median over all trials with censored times ranked last; the standard
  // error is half the spread of the order statistics n/2 -+ sqrt(n)/2.
  std::vector<double> ranked = exited;
  std::sort(ranked.begin(), ranked.end());
  const std::size_t n = s.n_trials;
  ranked.resize(n, std::numeric_limits<double>::infinity());
  if (2 * s.n_censored >= n) {
    s.median_exit_time = kNaN;
    s.median_stderr = kNaN;
  } else {
    s.median_exit_time = n % 2 ? ranked[n / 2] : 0.5 * (ranked[n / 2 - 1] + ranked[n / 2]);
    const double half = std::sqrt(static_cast<double>(n)) / 2;
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(n / 2.0 - half)));
    const auto hi = std::min(n - 1, static_cast<std::size_t>(std::ceil(n / 2.0 + half)));
    s.median_stderr = std::isfinite(ranked[hi]) ? 0.5 * (ranked[hi] - ranked[lo]) : kNaN;
  }

  // Exit-location histogram.
  if (domain.kind() == DomainKind::kInterval) {
    s.bin_edges = {-2.0, 0.0, 2.0};
  } else if (domain.kind() == DomainKind::kImplicit) {
    const auto samples = domain.boundary_samples(0).size();
    for (std::size_t k = 0; k <= samples; ++k) s.bin_edges.push_back(static_cast<double>(k) - 0.5);
  } else {
    if (options.bins < 1) throw PreconditionError("histogram needs at least one bin");
    for (int k = 0; k <= options.bins; ++k) {
      s.bin_edges.push_back(-std::numbers::pi + 2 * std::numbers::pi * k / options.bins);
    }
  }
  const std::size_t n_bins = s.bin_edges.size() - 1;
  s.histogram.assign(n_bins, 0);
  for (const auto& r : records) {
    if (r.censored || !std::isfinite(r.boundary_param)) continue;
    const auto it = std::upper_bound(s.bin_edges.begin(), s.bin_edges.end(), r.boundary_param);
    std::size_t bin = it == s.bin_edges.begin() ? 0 : static_cast<std::size_t>(it - s.bin_edges.begin()) - 1;
    s.histogram[std::min(bin, n_bins - 1)] += 1;
  }

  for (const auto& nb : options.neighborhoods) {
    if (nb.point.size() != domain.dim()) throw PreconditionError("neighborhood '" + nb.name + "' has the wrong dimension");
    std::size_t hits = 0;
    for (const auto& r : records) {
      if (!r.censored && (r.exit_point - nb.point).norm() <= nb.radius) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    s.neighborhoods.push_back({nb.name, p, std::sqrt(p * (1 - p) / static_cast<double>(n))});
  }

  if (options.window) {
    const auto& w = *options.window;
    const double lo = std::exp((w.quasipotential - w.eta) / w.epsilon);
    const double hi = std::exp((w.quasipotential + w.eta) / w.epsilon);
    std::size_t inside = 0;
    for (const auto& r : records) {
      if (!r.censored && r.exit_time > lo && r.exit_time < hi) ++inside;
    }
    s.window_fraction = static_cast<double>(inside) / static_cast<double>(n);
  }

  std::ostringstream note;
  if (s.all_censored) {
    note << "all " << n << " trials censored; restricted mean is only a lower bound";
  } else if (s.n_censored > 0) {
    note << s.n_censored << " of " << n
         << " trials censored; mean over exits and restricted mean are lower bounds";
  }
  s.note = note.str();
  return s;
}

KramersPoint kramers_point(double epsilon, const ExitSummary& summary) {
  return {epsilon, summary.mean_exit_time, summary.stderr_, summary.n_trials, summary.n_censored};
}

KramersFit kramers_fit(const std::vector<KramersPoint>& series) {
  std::set<double> distinct;
  for (const auto& p : series) {
    if (!(p.epsilon > 0)) throw PreconditionError("kramers_fit: epsilon must be positive");
    if (!(p.mean_exit_time > 0) || !std::isfinite(p.mean_exit_time)) {
      throw PreconditionError("kramers_fit: mean exit times must be positive");
    }
    distinct.insert(p.epsilon);
  }
  if (distinct.size() < 3) throw PreconditionError("kramers_fit: needs at least 3 distinct epsilons");

  KramersFit fit;
  fit.weighted = std::all_of(series.begin(), series.end(), [](const KramersPoint& p) {
    return std::isfinite(p.stderr_) && p.stderr_ > 0;
  });
  const std::size_t n = series.size();
  std::vector<double> x(n), y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 1.0 / series[i].epsilon;
    y[i] = std::log(series[i].mean_exit_time);
    // Delta method: sd of log(mean) is stderr / mean.
    w[i] = fit.weighted ? std::pow(series[i].mean_exit_time / series[i].stderr_, 2) : 1.0;
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
  }
  fit.quasipotential = sxy / sxx;
  fit.intercept = ybar - fit.quasipotential * xbar;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.quasipotential * x[i];
    fit.residuals.push_back(r);
    fit.weighted_rss += w[i] * r * r;
    fit.eps_log_mean.push_back(series[i].epsilon * y[i]);
  }
  // Known variances when weighted; residual variance otherwise.
  const double sigma2 = fit.weighted ? 1.0 : (n > 2 ? fit.weighted_rss / static_cast<double>(n - 2) : kNaN);
  fit.slope_stderr = std::sqrt(sigma2 / sxx);
  fit.intercept_stderr = std::sqrt(sigma2 * (1.0 / sw + xbar * xbar / sxx));
  return fit;
}

void write_exit_csv(std::ostream& out, const std::vector<ExitRecord>& records, int dim) {
  out << "trial,seed,exit_time";
  for (int c = 1; c <= dim; ++c) out << ",exit_x" << c;
  out << ",boundary_param,censored\n";
  for (const auto& r : records) {
    if (r.exit_point.size() != dim) throw PreconditionError("exit record dimension mismatch");
    out << r.trial << ',' << r.seed << ',' << format_number(r.exit_time);
    for (int c = 0; c < dim; ++c) out << ',' << format_number(r.exit_point(c));
    out << ',' << format_number(r.boundary_param) << ',' << (r.censored ? 1 : 0) << '\n';
  }
}

void write_kramers_csv(std::ostream& out, const std::vector<KramersPoint>& series) {
  out << "epsilon,n_trials,n_censored,mean_exit_time,stderr,eps_log_mean\n";
  for (const auto& p : series) {
    out << format_number(p.epsilon) << ',' << p.n_trials << ',' << p.n_censored << ','
        << format_number(p.mean_exit_time) << ',' << format_number(p.stderr_) << ','
        << format_number(p.epsilon * std::log(p.mean_exit_time)) << '\n';
  }
}

std::vector<KramersPoint> read_kramers_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("kramers CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epsilon,n_trials,n_censored,mean_exit_time,stderr,eps_log_mean") {
    throw PreconditionError("kramers CSV: unexpected header '" + line + "'");
  }
  std::vector<KramersPoint> series;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw PreconditionError("kramers CSV line " + std::to_string(number) + ": expected 6 columns");
    KramersPoint p;
    p.epsilon = parse_double(cells[0], number);
    p.n_trials = static_cast<std::size_t>(parse_double(cells[1], number));
    p.n_censored = static_cast<std::size_t>(parse_double(cells[2], number));
    p.mean_exit_time = parse_double(cells[3], number);
    p.stderr_ = parse_double(cells[4], number);
    series.push_back(p);
  }
  return series;
}

}  // namespace selfstab
