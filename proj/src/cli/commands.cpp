#include "selfstab/cli.hpp"

#include "selfstab/drift.hpp"
#include "selfstab/exitlab.hpp"
#include "selfstab/expr.hpp"
#include "selfstab/io.hpp"
#include "selfstab/ldp.hpp"
#include "selfstab/sde.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace selfstab::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

struct Context {
  const ScenarioConfig& config;
  const RunFlags& flags;
  std::ostream& out;
  CommandResult result;

  fs::path path_of(const std::string& section, const std::string& key) const {
    fs::path p = config.get(section, key);
    return p.is_absolute() ? p : flags.out_dir / p;
  }

  void write(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    write_atomic(path, body);
    result.outputs.push_back(path);
  }

  std::uint64_t seed() const { return config.get_seed("scenario", "seed"); }
  int workers() const { return config.get_int("scenario", "workers"); }
};

ordered_json point_json(const Vec& x) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x(i));
  return a;
}

std::string fmt(double x) { return format_number(x); }

fs::path with_suffix(const fs::path& base, const std::string& tag) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_" + tag + base.extension().string());
  return p;
}

/// x0 keys whose "auto" value means a point just inside the first boundary sample.
Vec start_point(const ScenarioConfig& config, const std::string& section) {
  if (!config.is_auto(section, "x0")) return config.get_point(section, "x0");
  const Vec xs = config.x_stable();
  const Vec b = config.domain().boundary_samples(1).front();
  return xs + 0.9 * (b - xs);
}

ActionVariant variant_from(const std::string& name) {
  if (name == "classical") return ActionVariant::kClassical;
  if (name == "limiting") return ActionVariant::kLimiting;
  return ActionVariant::kTracking;
}

ActionSpec action_spec(const ScenarioConfig& config, ActionVariant variant, double horizon) {
  switch (variant) {
    case ActionVariant::kClassical:
      return ActionSpec::classical(config.model());
    case ActionVariant::kLimiting:
      return ActionSpec::limiting(config.model(), config.x_stable());
    case ActionVariant::kTracking:
      return ActionSpec::tracking(config.model(), config.point_or_stable("action", "y"), 0.0, horizon);
  }
  return ActionSpec::classical(config.model());
}

SimulationMode exit_mode(const ScenarioConfig& config, const std::string& name, const std::string& section) {
  if (name == "classical") return SimulationMode::classical();
  if (name == "limiting") return SimulationMode::limiting(config.x_stable());
  if (name == "particle") {
    return SimulationMode::particle(section == "exit" ? config.get_int("exit", "particles") : 500);
  }
  throw PreconditionError("unsupported exit mode '" + name + "'");
}

/// Closed-form boundary minimum of a variant, when the model has a potential.
std::optional<BoundaryMinimum> closed_form_boundary(const ScenarioConfig& config, ActionVariant variant) {
  if (!config.model().has_potential()) return std::nullopt;
  const Vec xs = config.x_stable();
  return boundary_min(
      [&](const Vec& z) { return quasipotential_closed_form(config.model(), xs, z, variant); },
      config.domain(), config.get_int("quasipotential", "scan"));
}

double auto_horizon(const ScenarioConfig& config, const std::string& section, const std::string& mode,
                    double eps) {
  const double cap = config.get_double(section, "horizon_cap");
  if (!config.is_auto(section, "max_horizon")) return config.get_double(section, "max_horizon");
  const auto q = closed_form_boundary(config, mode == "classical" ? ActionVariant::kClassical : ActionVariant::kLimiting);
  if (!q) return cap;
  return std::min(cap, 50.0 * std::exp(q->value / eps));
}

// ---------------------------------------------------------------------------
// check-model
// ---------------------------------------------------------------------------

struct ModelCheck {
  AssumptionReport assumptions;
  StabilityReport stability;
  Vec x_stable;
};

ModelCheck check_model(Context& ctx) {
  const auto& c = ctx.config;
  ModelCheck mc;
  AssumptionTolerances tol;
  tol.r0 = c.get_double("constants", "r0");
  tol.n_samples = c.get_int("constants", "samples");
  tol.seed = c.get_seed("scenario", "seed");
  const Box box = c.constants_box();
  mc.assumptions = check_assumptions(c.model(), box, tol);
  ctx.out << "model: dim " << c.dim() << ", phi " << c.model().profile().describe() << "\n";
  for (const auto& clause : mc.assumptions.clauses) {
    ctx.out << "  " << (clause.passed ? "pass" : (clause.required ? "FAIL" : "no  ")) << "  " << clause.name
            << ": " << clause.detail << "\n";
  }
  mc.x_stable = c.x_stable();
  StabilityOptions so;
  so.n_boundary = c.get_int("stability", "boundary_points");
  so.n_interior = c.get_int("stability", "interior_points");
  so.horizon = c.get_double("stability", "horizon");
  so.dt = c.get_double("stability", "dt");
  so.tol = c.get_double("stability", "tol");
  so.workers = ctx.workers();
  mc.stability = verify_domain_stability(c.model(), c.domain(), mc.x_stable, so);
  ctx.out << "x_stable " << format_point(mc.x_stable) << "; domain " << c.domain().describe() << "\n";
  ctx.out << "  " << (mc.stability.passed ? "pass" : "FAIL") << "  domain_stability: " << mc.stability.n_checked
          << " relaxed-flow starts, worst final distance " << fmt(mc.stability.worst_final_distance) << "\n";

  ordered_json j;
  j["scenario"] = c.name();
  ordered_json clauses = ordered_json::array();
  for (const auto& clause : mc.assumptions.clauses) {
    clauses.push_back({{"name", clause.name}, {"passed", clause.passed}, {"required", clause.required},
                       {"detail", clause.detail}});
  }
  j["assumptions"] = clauses;
  j["box"] = {{"lo", point_json(box.lo)}, {"hi", point_json(box.hi)}};
  if (const auto& k = mc.assumptions.constants) {
    j["constants"] = {{"K", k->k_upper}, {"K_raw", k->k_upper_raw}, {"K_V", k->k_convex}, {"eta", k->eta},
                      {"R0", k->r0}, {"R1", k->r1}};
  }
  j["global_convexity"] = mc.assumptions.global_convexity;
  j["x_stable"] = point_json(mc.x_stable);
  ordered_json failures = ordered_json::array();
  for (const auto& f : mc.stability.failures) {
    failures.push_back({{"start", point_json(f.start)}, {"reason", f.reason}, {"time", f.time},
                        {"point", point_json(f.point)}});
  }
  ordered_json stability = {{"passed", mc.stability.passed},
                            {"checked", mc.stability.n_checked},
                            {"worst_final_distance", mc.stability.worst_final_distance},
                            {"failures", failures}};
  ctx.write(ctx.path_of("constants", "output"), [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  ctx.write(ctx.path_of("stability", "output"), [&](std::ostream& os) { os << stability.dump(2) << "\n"; });
  if (!mc.assumptions.all_passed() || !mc.stability.passed) ctx.result.status = 3;
  return mc;
}

// ---------------------------------------------------------------------------
// flow, solve-drift, simulate
// ---------------------------------------------------------------------------

void flow(Context& ctx) {
  const auto& c = ctx.config;
  const Vec x0 = start_point(c, "flow");
  const double T = c.get_double("flow", "horizon");
  const double dt = c.get_double("flow", "dt");
  const bool relaxed = c.get_bool("flow", "relaxed");
  const PathSample path = relaxed ? integrate_relaxed_flow(c.model(), c.x_stable(), x0, T, dt)
                                  : integrate_flow(c.model(), x0, T, dt);
  ctx.out << (relaxed ? "relaxed flow" : "flow") << " from " << format_point(x0) << " to t = " << fmt(path.horizon())
          << ": " << format_point(path.final_state()) << "\n";
  ctx.write(ctx.path_of("flow", "output"), [&](std::ostream& os) { write_path_csv(os, {{0, 0, &path}}, c.dim()); });
}

std::shared_ptr<const DriftField> solve_drift(Context& ctx) {
  const auto& c = ctx.config;
  const Vec x0 = c.point_or_stable("drift", "x0");
  const double eps = c.get_double("drift", "epsilon");
  const double T = c.get_double("drift", "horizon");
  const double field_dt = c.get_double("drift", "field_dt");
  DriftGrid grid;
  grid.horizon = T;
  grid.time_steps = static_cast<int>(step_count(T, field_dt));
  grid.box = default_drift_box(integrate_flow(c.model(), x0, T), eps, T);
  grid.nodes.assign(c.dim(), c.get_int("drift", "nodes"));
  SolveOptions so;
  so.tol = c.get_double("drift", "tol");
  so.max_iter = c.get_int("drift", "max_iter");
  so.fresh_noise = c.get_bool("drift", "fresh_noise");
  so.gamma.dt = c.get_double("drift", "euler_dt");
  so.gamma.workers = ctx.workers();
  const int M = c.get_int("drift", "particles");
  auto solved = solve_self_consistent_drift(c.model(), x0, eps, grid, M, ctx.seed(), so);
  for (const auto& r : solved.log) {
    ctx.out << "  iteration " << r.iteration << ": increment " << fmt(r.increment) << ", ratio " << fmt(r.ratio)
            << "\n";
  }
  ctx.out << "self-consistent drift " << (solved.converged ? "converged" : "did NOT converge") << " after "
          << solved.log.size() << " iterations (M = " << M << ", eps = " << fmt(eps) << ")\n";
  ctx.write(ctx.path_of("drift", "output"), [&](std::ostream& os) { solved.field.write(os); });
  ctx.write(ctx.path_of("drift", "log_output"), [&](std::ostream& os) {
    os << "iteration,increment,ratio,lambda_norm\n";
    for (const auto& r : solved.log) {
      os << r.iteration << ',' << fmt(r.increment) << ',' << fmt(r.ratio) << ',' << fmt(r.lambda_norm) << '\n';
    }
  });
  if (!solved.converged) ctx.result.status = 6;
  return std::make_shared<const DriftField>(std::move(solved.field));
}

void simulate_paths(Context& ctx) {
  const auto& c = ctx.config;
  const std::string mode_name = c.get("simulate", "mode");
  const double T = c.get_double("simulate", "horizon");
  const double offset = c.get_double("simulate", "offset");
  const double dt = c.get_double("simulate", "dt");
  const Vec x0 = c.point_or_stable("simulate", "x0");
  SimulationMode mode;
  switch (mode_from_string(mode_name)) {
    case ModeKind::kClassical:
      mode = SimulationMode::classical();
      break;
    case ModeKind::kParticle:
      mode = SimulationMode::particle(c.get_int("simulate", "particles"));
      break;
    case ModeKind::kLimiting:
      mode = SimulationMode::limiting(c.x_stable());
      break;
    case ModeKind::kTracking:
      mode = SimulationMode::tracking(c.model(), x0, offset, T);
      break;
    case ModeKind::kFrozen: {
      std::shared_ptr<const DriftField> field;
      if (c.is_auto("simulate", "drift_table")) {
        field = solve_drift(ctx);
      } else {
        std::ifstream in(c.get("simulate", "drift_table"));
        if (!in) throw PreconditionError("cannot read drift table " + c.get("simulate", "drift_table"));
        field = std::make_shared<const DriftField>(DriftField::read(in));
      }
      mode = SimulationMode::frozen(field, offset);
      break;
    }
  }
  const NoisePlan noise(ctx.seed(), dt);
  const double eps = c.get_double("simulate", "epsilon");
  const int trials = c.get_int("simulate", "trials");
  std::vector<std::vector<PathSample>> runs(trials);
  for (int j = 0; j < trials; ++j) runs[j] = simulate(c.model(), mode, x0, eps, T, noise, j);
  std::vector<PathDump> dumps;
  for (int j = 0; j < trials; ++j) {
    for (std::size_t p = 0; p < runs[j].size(); ++p) {
      dumps.push_back({static_cast<std::uint64_t>(j), static_cast<std::uint32_t>(p), &runs[j][p]});
    }
  }
  ctx.out << mode_name << " mode, eps = " << fmt(eps) << ", " << trials << " trial(s) of T = " << fmt(T)
          << "; trial 0 ends at " << format_point(runs.front().front().final_state()) << "\n";
  ctx.write(ctx.path_of("simulate", "output"), [&](std::ostream& os) { write_path_csv(os, dumps, c.dim()); });
}

// ---------------------------------------------------------------------------
// action, quasipotential
// ---------------------------------------------------------------------------

void action_cmd(Context& ctx) {
  const auto& c = ctx.config;
  const double T = c.get_double("action", "horizon");
  const int n = c.get_int("action", "nodes");
  const ActionVariant variant = variant_from(c.get("action", "variant"));
  const ActionSpec spec = action_spec(c, variant, T);
  const Vec y = c.point_or_stable("action", "y");
  const Vec z = c.is_auto("action", "z") ? c.domain().boundary_samples(1).front() : c.get_point("action", "z");
  DiscretePath path = DiscretePath::straight(y, z, T, n);
  double value = action(spec, path);
  if (c.get_bool("action", "minimize")) {
    MinimizeOptions mo;
    mo.multistart = c.get_int("action", "multistart");
    mo.seed = ctx.seed();
    const auto r = minimize_cost(spec, y, z, T, n, mo);
    path = r.path;
    value = r.value;
    ctx.out << "C(y, z, T) = " << fmt(value) << " (" << to_string(variant) << ", T = " << fmt(T) << ", n = " << n
            << ", |grad| = " << fmt(r.gradient_norm) << (r.converged ? "" : ", not converged") << ")\n";
  } else {
    ctx.out << "action of the straight path = " << fmt(value) << "\n";
  }
  const PathSample sample = path.to_path_sample();
  ctx.write(ctx.path_of("action", "output"), [&](std::ostream& os) { write_path_csv(os, {{0, 0, &sample}}, c.dim()); });
}

struct QuasipotentialRow {
  std::string variant;
  std::string method;
  double value;
  double best_horizon;
  bool interior;
  Vec z;
  double param;
};

std::vector<QuasipotentialRow> quasipotential_cmd(Context& ctx) {
  const auto& c = ctx.config;
  const Vec y = c.point_or_stable("quasipotential", "y");
  const bool closed = c.is_auto("quasipotential", "closed_form") ? c.model().has_potential()
                                                                   : c.get_bool("quasipotential", "closed_form");
  const bool numeric = c.get_bool("quasipotential", "numeric") && !ctx.flags.closed_form_only;
  if (closed && !c.model().has_potential()) throw ModelError("closed-form quasi-potential needs a potential");
  const auto grid = geometric_grid(c.get_double("quasipotential", "t_min"), c.get_double("quasipotential", "t_max"),
                                   c.get_int("quasipotential", "t_count"));
  const int n = c.get_int("quasipotential", "nodes");
  QuasipotentialOptions qo;
  qo.minimize.multistart = c.get_int("quasipotential", "multistart");
  qo.minimize.seed = ctx.seed();
  qo.golden_iterations = c.get_int("quasipotential", "golden_iterations");
  const Vec xs = c.x_stable();

  std::vector<QuasipotentialRow> rows;
  for (const auto& name : c.get_words("quasipotential", "variants")) {
    const ActionVariant variant = variant_from(name);
    std::vector<Vec> targets;
    if (closed) {
      const auto bm = boundary_min(
          [&](const Vec& z) { return quasipotential_closed_form(c.model(), xs, z, variant); }, c.domain(),
          c.get_int("quasipotential", "scan"));
      ctx.out << name << ": closed-form Qbar = " << fmt(bm.value) << " at";
      for (std::size_t k = 0; k < bm.argmins.size(); ++k) {
        ctx.out << " " << format_point(bm.argmins[k]);
        rows.push_back({name, "closed_form", bm.value, NAN, true, bm.argmins[k], bm.params[k]});
      }
      ctx.out << "\n";
      targets = bm.argmins;
    }
    if (!numeric) continue;
    const ActionSpec spec = action_spec(c, variant, grid.back());
    auto numeric_at = [&](const Vec& z) { return quasipotential_numeric(spec, y, z, grid, n, qo); };
    if (targets.empty()) {
      // No closed form: coarse numeric boundary search.
      const auto bm = boundary_min([&](const Vec& z) { return numeric_at(z).value; }, c.domain(),
                                   c.get_int("quasipotential", "numeric_scan"), 1e-3, 1e-3);
      targets = bm.argmins;
    }
    for (const Vec& z : targets) {
      const auto r = numeric_at(z);
      ctx.out << name << ": numeric Q(" << format_point(y) << ", " << format_point(z) << ") = " << fmt(r.value)
              << " at T = " << fmt(r.best_horizon) << (r.interior_minimum ? "" : " (T grid edge)") << "\n";
      rows.push_back({name, "numeric", r.value, r.best_horizon, r.interior_minimum, z, c.domain().boundary_param(z)});
    }
  }
  ctx.write(ctx.path_of("quasipotential", "output"), [&](std::ostream& os) {
    os << "variant,method,value,best_horizon,interior_minimum";
    for (int i = 1; i <= c.dim(); ++i) os << ",z" << i;
    os << ",boundary_param\n";
    for (const auto& r : rows) {
      os << r.variant << ',' << r.method << ',' << fmt(r.value) << ',' << fmt(r.best_horizon) << ','
         << (r.interior ? 1 : 0);
      for (int i = 0; i < c.dim(); ++i) os << ',' << fmt(r.z(i));
      os << ',' << fmt(r.param) << '\n';
    }
  });
  return rows;
}

// ---------------------------------------------------------------------------
// exit, kramers
// ---------------------------------------------------------------------------

struct ExitRun {
  std::string mode;
  double epsilon;
  double horizon;
  ExitSummary summary;
};

std::vector<Neighborhood> neighborhoods(const ScenarioConfig& c) {
  std::vector<Neighborhood> out;
  const double radius = c.is_auto("exit", "neighborhood_radius") ? 0.25 * c.domain().scale()
                                                                  : c.get_double("exit", "neighborhood_radius");
  if (c.domain().kind() == DomainKind::kInterval) {
    out.push_back({"lower", c.domain().boundary_point(-1.0), radius});
    out.push_back({"upper", c.domain().boundary_point(1.0), radius});
    return out;
  }
  for (ActionVariant v : {ActionVariant::kClassical, ActionVariant::kLimiting}) {
    if (const auto bm = closed_form_boundary(c, v)) {
      for (std::size_t k = 0; k < bm->argmins.size(); ++k) {
        out.push_back({to_string(v) + "_argmin_" + std::to_string(k + 1), bm->argmins[k], radius});
      }
    }
  }
  return out;
}

std::vector<ExitRun> exit_cmd(Context& ctx) {
  const auto& c = ctx.config;
  const Vec x0 = c.point_or_stable("exit", "x0");
  const double dt = c.get_double("exit", "dt");
  const int trials = c.get_int("exit", "trials");
  ExitStatisticsOptions so;
  so.bins = c.get_int("exit", "bins");
  so.neighborhoods = neighborhoods(c);
  ExitOptions eo;
  eo.workers = ctx.workers();
  const fs::path base = ctx.path_of("exit", "output");
  std::vector<ExitRun> runs;
  for (const auto& mode_name : c.get_words("exit", "modes")) {
    const SimulationMode mode = exit_mode(c, mode_name, "exit");
    for (double eps : c.get_list("exit", "epsilons")) {
      const double horizon = auto_horizon(c, "exit", mode_name, eps);
      if (!c.is_auto("exit", "window_eta")) {
        if (const auto q = closed_form_boundary(c, mode_name == "classical" ? ActionVariant::kClassical
                                                                            : ActionVariant::kLimiting)) {
          so.window = ExitStatisticsOptions::Window{q->value, c.get_double("exit", "window_eta"), eps};
        }
      }
      const auto records = run_exit_trials(c.model(), mode, c.domain(), x0, eps, trials, horizon,
                                           NoisePlan(ctx.seed(), dt), eo);
      const auto summary = exit_statistics(records, c.domain(), so);
      ctx.out << mode_name << " eps = " << fmt(eps) << ": mean exit time " << fmt(summary.mean_exit_time) << " +- "
              << fmt(summary.stderr_) << ", " << summary.n_censored << "/" << summary.n_trials
              << " censored at " << fmt(horizon);
      for (const auto& nb : summary.neighborhoods) ctx.out << ", " << nb.name << " " << fmt(nb.fraction);
      ctx.out << "\n";
      if (!summary.note.empty()) ctx.out << "  note: " << summary.note << "\n";
      ctx.write(with_suffix(base, mode_name + "_eps" + fmt(eps)),
                [&](std::ostream& os) { write_exit_csv(os, records, c.dim()); });
      runs.push_back({mode_name, eps, horizon, summary});
    }
  }
  ctx.write(ctx.path_of("exit", "summary_output"), [&](std::ostream& os) {
    os << "mode,epsilon,statistic,value,stderr\n";
    for (const auto& r : runs) {
      const auto& s = r.summary;
      auto row = [&](const std::string& stat, double v, double se) {
        os << r.mode << ',' << fmt(r.epsilon) << ',' << stat << ',' << fmt(v) << ',' << fmt(se) << '\n';
      };
      row("n_trials", static_cast<double>(s.n_trials), NAN);
      row("n_censored", static_cast<double>(s.n_censored), NAN);
      row("max_horizon", r.horizon, NAN);
      row("mean_exit_time", s.mean_exit_time, s.stderr_);
      row("restricted_mean", s.restricted_mean, s.restricted_stderr);
      row("median_exit_time", s.median_exit_time, s.median_stderr);
      for (const auto& nb : s.neighborhoods) row("fraction_" + nb.name, nb.fraction, nb.stderr_);
      if (s.window_fraction) row("window_fraction", *s.window_fraction, NAN);
      for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        row("hist[" + fmt(s.bin_edges[b]) + ";" + fmt(s.bin_edges[b + 1]) + ")", static_cast<double>(s.histogram[b]), NAN);
      }
    }
  });
  return runs;
}

struct KramersRun {
  std::vector<KramersPoint> series;
  KramersFit fit;
};

KramersRun kramers_cmd(Context& ctx) {
  const auto& c = ctx.config;
  KramersRun kr;
  if (!c.is_auto("kramers", "input")) {
    std::ifstream in(c.get("kramers", "input"));
    if (!in) throw PreconditionError("cannot read kramers input " + c.get("kramers", "input"));
    kr.series = read_kramers_csv(in);
  } else {
    const std::string mode_name = c.get("kramers", "mode");
    const SimulationMode mode = exit_mode(c, mode_name, "kramers");
    const Vec x0 = c.point_or_stable("kramers", "x0");
    ExitOptions eo;
    eo.workers = ctx.workers();
    for (double eps : c.get_list("kramers", "epsilons")) {
      const double horizon = auto_horizon(c, "kramers", mode_name, eps);
      const auto records = run_exit_trials(c.model(), mode, c.domain(), x0, eps, c.get_int("kramers", "trials"),
                                           horizon, NoisePlan(ctx.seed(), c.get_double("kramers", "dt")), eo);
      const auto summary = exit_statistics(records, c.domain());
      ctx.out << mode_name << " eps = " << fmt(eps) << ": mean exit time " << fmt(summary.mean_exit_time) << " +- "
              << fmt(summary.stderr_) << " (" << summary.n_censored << " censored)\n";
      kr.series.push_back(kramers_point(eps, summary));
    }
    ctx.write(ctx.path_of("kramers", "output"), [&](std::ostream& os) { write_kramers_csv(os, kr.series); });
  }
  kr.fit = kramers_fit(kr.series);
  ctx.out << "Kramers fit: Q = " << fmt(kr.fit.quasipotential) << " +- " << fmt(kr.fit.slope_stderr)
          << ", intercept " << fmt(kr.fit.intercept) << (kr.fit.weighted ? " (weighted)" : " (unweighted)") << "\n";
  ordered_json j;
  j["quasipotential"] = kr.fit.quasipotential;
  j["slope_stderr"] = kr.fit.slope_stderr;
  j["intercept"] = kr.fit.intercept;
  j["intercept_stderr"] = kr.fit.intercept_stderr;
  j["weighted"] = kr.fit.weighted;
  j["weighted_rss"] = kr.fit.weighted_rss;
  ordered_json points = ordered_json::array();
  for (std::size_t i = 0; i < kr.series.size(); ++i) {
    points.push_back({{"epsilon", kr.series[i].epsilon}, {"mean_exit_time", kr.series[i].mean_exit_time},
                      {"stderr", kr.series[i].stderr_}, {"eps_log_mean", kr.fit.eps_log_mean[i]},
                      {"residual", kr.fit.residuals[i]}});
  }
  j["points"] = points;
  ctx.write(ctx.path_of("kramers", "fit_output"), [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  return kr;
}

// ---------------------------------------------------------------------------
// scenario
// ---------------------------------------------------------------------------

void scenario_cmd(Context& ctx) {
  const auto& c = ctx.config;
  struct Row {
    std::string section, quantity;
    double value;
    double reference;
    std::string note;
  };
  std::vector<Row> rows;
  ctx.out << "== check-model\n";
  const ModelCheck mc = check_model(ctx);
  if (const auto& k = mc.assumptions.constants) {
    rows.push_back({"constants", "K", k->k_upper, NAN, ""});
    rows.push_back({"constants", "K_V", k->k_convex, NAN, ""});
    rows.push_back({"constants", "R1", k->r1, NAN, ""});
  }
  rows.push_back({"assumptions", "all_passed", mc.assumptions.all_passed() ? 1.0 : 0.0, 1.0, ""});
  rows.push_back({"stability", "passed", mc.stability.passed ? 1.0 : 0.0, 1.0,
                  std::to_string(mc.stability.n_checked) + " starts"});

  ctx.out << "== quasipotential\n";
  const auto qrows = quasipotential_cmd(ctx);
  std::map<std::string, double> closed;
  for (const auto& r : qrows) {
    if (r.method == "closed_form") closed[r.variant] = r.value;
  }
  for (const auto& r : qrows) {
    if (r.method == "closed_form") {
      rows.push_back({"quasipotential", r.variant + "_closed_form", r.value, NAN, "argmin " + format_point(r.z)});
    } else {
      const double ref = closed.count(r.variant) ? closed[r.variant] : NAN;
      rows.push_back({"quasipotential", r.variant + "_numeric", r.value, ref,
                      "z = " + format_point(r.z) + ", T* = " + fmt(r.best_horizon) +
                          (r.interior ? "" : " (grid edge)")});
    }
  }

  ctx.out << "== exit\n";
  for (const auto& r : exit_cmd(ctx)) {
    const std::string tag = r.mode + "_eps" + fmt(r.epsilon);
    rows.push_back({"exit", tag + "_mean_exit_time", r.summary.mean_exit_time, NAN,
                    "stderr " + fmt(r.summary.stderr_) + ", censored " + std::to_string(r.summary.n_censored) + "/" +
                        std::to_string(r.summary.n_trials)});
    rows.push_back({"exit", tag + "_restricted_mean", r.summary.restricted_mean, NAN, "lower bound"});
    for (const auto& nb : r.summary.neighborhoods) {
      rows.push_back({"exit", tag + "_fraction_" + nb.name, nb.fraction, NAN, "stderr " + fmt(nb.stderr_)});
    }
  }

  ctx.out << "== kramers\n";
  const auto kr = kramers_cmd(ctx);
  const std::string kmode = c.get("kramers", "mode");
  const std::string kvariant = kmode == "classical" ? "classical" : "limiting";
  rows.push_back({"kramers", kmode + "_slope", kr.fit.quasipotential,
                  closed.count(kvariant) ? closed[kvariant] : NAN, "stderr " + fmt(kr.fit.slope_stderr)});

  ctx.write(ctx.path_of("scenario", "summary_output"), [&](std::ostream& os) {
    os << "section,quantity,value,reference,note\n";
    for (const auto& r : rows) {
      os << r.section << ',' << r.quantity << ',' << fmt(r.value) << ',' << fmt(r.reference) << ",\"" << r.note
         << "\"\n";
    }
  });
  ctx.out << "== summary\n";
  for (const auto& r : rows) {
    ctx.out << "  " << r.section << "." << r.quantity << " = " << fmt(r.value);
    if (!std::isnan(r.reference)) ctx.out << " (reference " << fmt(r.reference) << ")";
    if (!r.note.empty()) ctx.out << "  [" << r.note << "]";
    ctx.out << "\n";
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"check-model", "flow",           "solve-drift",
                                                 "simulate",    "action",         "quasipotential",
                                                 "exit",        "kramers",        "scenario"};
  return names;
}

CommandResult run_command(std::string_view name, const ScenarioConfig& config, const RunFlags& flags,
                          std::ostream& out) {
  Context ctx{config, flags, out, {}};
  const std::string command(name);
  ctx.write(flags.out_dir / (command + ".resolved.ini"), [&](std::ostream& os) { os << config.resolved_text(); });
  if (command == "check-model") {
    check_model(ctx);
  } else if (command == "flow") {
    flow(ctx);
  } else if (command == "solve-drift") {
    solve_drift(ctx);
  } else if (command == "simulate") {
    simulate_paths(ctx);
  } else if (command == "action") {
    action_cmd(ctx);
  } else if (command == "quasipotential") {
    quasipotential_cmd(ctx);
  } else if (command == "exit") {
    exit_cmd(ctx);
  } else if (command == "kramers") {
    kramers_cmd(ctx);
  } else if (command == "scenario") {
    scenario_cmd(ctx);
  } else {
    throw PreconditionError("unknown subcommand '" + command + "'");
  }
  return ctx.result;
}

std::string error_line(const std::exception& e) {
  ordered_json j;
  ordered_json body;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    body["kind"] = "config";
    body["key"] = ce->key_path();
  } else if (const auto* se = dynamic_cast<const expr::SyntaxError*>(&e)) {
    body["kind"] = "syntax";
    body["offset"] = se->offset();
  } else if (const auto* le = dynamic_cast<const Error*>(&e)) {
    body["kind"] = le->kind();
  } else if (dynamic_cast<const fs::filesystem_error*>(&e)) {
    body["kind"] = "io";
  } else {
    body["kind"] = "internal";
  }
  body["message"] = e.what();
  j["error"] = body;
  return j.dump();
}

int exit_status(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const expr::SyntaxError*>(&e) || dynamic_cast<const expr::EvalDomainError*>(&e)) return 7;
  if (dynamic_cast<const ModelError*>(&e)) return 3;
  if (dynamic_cast<const PreconditionError*>(&e)) return 4;
  if (dynamic_cast<const DivergenceError*>(&e)) return 5;
  if (dynamic_cast<const ConvergenceError*>(&e)) return 6;
  return 1;
}

}  // namespace selfstab::cli
