// Python bindings. Points cross the boundary as lists of floats; the
// heavy loops (simulation, minimization, Monte Carlo) stay in C++ and
// release the GIL.

#include "selfstab/cli.hpp"
#include "selfstab/config.hpp"
#include "selfstab/drift.hpp"
#include "selfstab/exitlab.hpp"
#include "selfstab/expr.hpp"
#include "selfstab/ldp.hpp"
#include "selfstab/sde.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace selfstab;

namespace {

Vec to_vec(const std::vector<double>& v) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) {
    throw PreconditionError("points must have 1 to 3 coordinates");
  }
  Vec x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
  return x;
}

std::vector<double> from_vec(const Vec& x) { return {x.data(), x.data() + x.size()}; }

std::vector<std::vector<double>> from_vecs(const std::vector<Vec>& xs) {
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) out.push_back(from_vec(x));
  return out;
}

py::dict path_dict(const PathSample& p) {
  py::dict d;
  d["t0"] = p.t0;
  d["dt"] = p.dt;
  d["states"] = from_vecs(p.states);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-stabilizing diffusions: models, quasi-potentials and exit-time Monte Carlo";

  auto error = py::register_exception<Error>(m, "SelfstabError", PyExc_RuntimeError);
  py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());
  py::register_exception<ModelError>(m, "ModelError", error.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<expr::SyntaxError>(m, "SyntaxError", error.ptr());

  // --- expressions and models -------------------------------------------
  py::class_<expr::Expression>(m, "Expression")
      .def(py::init([](const std::string& text, int dim) { return expr::parse(text, dim); }), py::arg("text"),
           py::arg("dim"))
      .def("__call__", [](const expr::Expression& e, const std::vector<double>& x) { return e(to_vec(x)); })
      .def("gradient",
           [](const expr::Expression& e, const std::vector<double>& x) {
             Vec g;
             expr::eval_gradient(e, to_vec(x), g);
             return from_vec(g);
           })
      .def("render", &expr::Expression::render);

  py::class_<RadialProfile>(m, "RadialProfile")
      .def(py::init([](const std::string& text) { return RadialProfile::parse(text); }), py::arg("text"))
      .def_static("polynomial", &RadialProfile::polynomial, py::arg("coefficients"))
      .def("__call__", &RadialProfile::value)
      .def("integral", &RadialProfile::integral)
      .def("is_linear", &RadialProfile::is_linear)
      .def("describe", &RadialProfile::describe);

  py::class_<ModelSpec>(m, "Model")
      .def_static(
          "gradient",
          [](int dim, const std::string& potential, const std::string& phi) {
            return ModelSpec::gradient(dim, expr::parse(potential, dim), RadialProfile::parse(phi));
          },
          py::arg("dim"), py::arg("potential"), py::arg("phi") = "0")
      .def_static(
          "from_drift",
          [](int dim, const std::vector<std::string>& components, const std::string& phi) {
            std::vector<expr::Expression> parsed;
            for (const auto& c : components) parsed.push_back(expr::parse(c, dim));
            return ModelSpec::from_drift(dim, std::move(parsed), RadialProfile::parse(phi));
          },
          py::arg("dim"), py::arg("components"), py::arg("phi") = "0")
      .def_property_readonly("dim", &ModelSpec::dim)
      .def("drift", [](const ModelSpec& s, const std::vector<double>& x) { return from_vec(s.drift(to_vec(x))); })
      .def("potential", [](const ModelSpec& s, const std::vector<double>& x) { return s.potential(to_vec(x)); })
      .def("has_potential", &ModelSpec::has_potential);

  py::class_<Domain>(m, "Domain")
      .def_static("interval", &Domain::interval, py::arg("a"), py::arg("b"))
      .def_static(
          "ball", [](const std::vector<double>& c, double r) { return Domain::ball(to_vec(c), r); },
          py::arg("center"), py::arg("radius"))
      .def_static(
          "ellipse",
          [](const std::vector<double>& c, const std::vector<double>& a) {
            return Domain::ellipse(to_vec(c), to_vec(a));
          },
          py::arg("center"), py::arg("semi_axes"))
      .def("contains", [](const Domain& d, const std::vector<double>& x) { return d.contains(to_vec(x)); })
      .def("level", [](const Domain& d, const std::vector<double>& x) { return d.level(to_vec(x)); })
      .def("boundary_point", [](const Domain& d, double p) { return from_vec(d.boundary_point(p)); })
      .def("describe", &Domain::describe);

  // --- flows -------------------------------------------------------------
  m.def(
      "integrate_flow",
      [](const ModelSpec& s, const std::vector<double>& x0, double T, double dt) {
        return path_dict(integrate_flow(s, to_vec(x0), T, dt));
      },
      py::arg("model"), py::arg("x0"), py::arg("horizon"), py::arg("dt") = 1e-3);
  m.def(
      "find_equilibrium",
      [](const ModelSpec& s, const std::vector<double>& guess) {
        return from_vec(find_equilibrium(s, to_vec(guess)).point);
      },
      py::arg("model"), py::arg("guess"));

  // --- large deviations -------------------------------------------------
  py::enum_<ActionVariant>(m, "ActionVariant")
      .value("classical", ActionVariant::kClassical)
      .value("limiting", ActionVariant::kLimiting)
      .value("tracking", ActionVariant::kTracking);

  auto make_spec = [](const ModelSpec& s, ActionVariant v, const std::vector<double>& x_stable) {
    if (v == ActionVariant::kClassical) return ActionSpec::classical(s);
    if (v == ActionVariant::kLimiting) return ActionSpec::limiting(s, to_vec(x_stable));
    throw PreconditionError("the tracking variant is available through the CLI only");
  };

  m.def(
      "quasipotential_closed_form",
      [](const ModelSpec& s, const std::vector<double>& xs, const std::vector<double>& z, ActionVariant v) {
        return quasipotential_closed_form(s, to_vec(xs), to_vec(z), v);
      },
      py::arg("model"), py::arg("x_stable"), py::arg("z"), py::arg("variant") = ActionVariant::kLimiting);

  m.def(
      "boundary_min_closed_form",
      [](const ModelSpec& s, const std::vector<double>& xs, const Domain& d, ActionVariant v, int n_scan) {
        const Vec x = to_vec(xs);
        const auto bm = boundary_min([&](const Vec& z) { return quasipotential_closed_form(s, x, z, v); }, d, n_scan);
        py::dict out;
        out["value"] = bm.value;
        out["argmins"] = from_vecs(bm.argmins);
        out["params"] = bm.params;
        return out;
      },
      py::arg("model"), py::arg("x_stable"), py::arg("domain"), py::arg("variant") = ActionVariant::kLimiting,
      py::arg("n_scan") = 360);

  m.def(
      "minimize_cost",
      [make_spec](const ModelSpec& s, ActionVariant v, const std::vector<double>& xs, const std::vector<double>& y,
                  const std::vector<double>& z, double T, int n, int multistart) {
        const ActionSpec spec = make_spec(s, v, xs);
        MinimizeOptions options;
        options.multistart = multistart;
        CostResult r;
        {
          py::gil_scoped_release release;
          r = minimize_cost(spec, to_vec(y), to_vec(z), T, n, options);
        }
        py::dict out;
        out["value"] = r.value;
        out["gradient_norm"] = r.gradient_norm;
        out["converged"] = r.converged;
        out["path"] = path_dict(r.path.to_path_sample());
        return out;
      },
      py::arg("model"), py::arg("variant"), py::arg("x_stable"), py::arg("y"), py::arg("z"), py::arg("horizon"),
      py::arg("n_nodes") = 200, py::arg("multistart") = 3);

  m.def(
      "quasipotential_numeric",
      [make_spec](const ModelSpec& s, ActionVariant v, const std::vector<double>& xs, const std::vector<double>& y,
                  const std::vector<double>& z, const std::vector<double>& horizons, int n, int multistart) {
        const ActionSpec spec = make_spec(s, v, xs);
        QuasipotentialOptions options;
        options.minimize.multistart = multistart;
        QuasipotentialResult r;
        {
          py::gil_scoped_release release;
          r = quasipotential_numeric(spec, to_vec(y), to_vec(z), horizons, n, options);
        }
        py::dict out;
        out["value"] = r.value;
        out["best_horizon"] = r.best_horizon;
        out["interior_minimum"] = r.interior_minimum;
        return out;
      },
      py::arg("model"), py::arg("variant"), py::arg("x_stable"), py::arg("y"), py::arg("z"), py::arg("horizons"),
      py::arg("n_nodes") = 200, py::arg("multistart") = 3);
  m.def("geometric_grid", &geometric_grid, py::arg("lo"), py::arg("hi"), py::arg("count"));

  // --- simulation and exits ---------------------------------------------
  auto make_mode = [](const std::string& mode, const std::vector<double>& xs, int particles) {
    if (mode == "classical") return SimulationMode::classical();
    if (mode == "limiting") return SimulationMode::limiting(to_vec(xs));
    if (mode == "particle") return SimulationMode::particle(particles);
    throw PreconditionError("mode must be classical, limiting or particle");
  };

  m.def(
      "simulate",
      [make_mode](const ModelSpec& s, const std::string& mode, const std::vector<double>& x0, double eps, double T,
                  std::uint64_t seed, double dt, std::uint64_t trial, const std::vector<double>& xs, int particles) {
        const SimulationMode sm = make_mode(mode, xs.empty() ? x0 : xs, particles);
        std::vector<PathSample> paths;
        {
          py::gil_scoped_release release;
          paths = simulate(s, sm, to_vec(x0), eps, T, NoisePlan(seed, dt), trial);
        }
        py::list out;
        for (const auto& p : paths) out.append(path_dict(p));
        return out;
      },
      py::arg("model"), py::arg("mode"), py::arg("x0"), py::arg("epsilon"), py::arg("horizon"), py::arg("seed"),
      py::arg("dt") = 1e-3, py::arg("trial") = 0, py::arg("x_stable") = std::vector<double>{},
      py::arg("particles") = 100);

  py::class_<ExitRecord>(m, "ExitRecord")
      .def_readonly("trial", &ExitRecord::trial)
      .def_readonly("seed", &ExitRecord::seed)
      .def_readonly("exit_time", &ExitRecord::exit_time)
      .def_property_readonly("exit_point", [](const ExitRecord& r) { return from_vec(r.exit_point); })
      .def_readonly("boundary_param", &ExitRecord::boundary_param)
      .def_readonly("censored", &ExitRecord::censored);

  m.def(
      "run_exit_trials",
      [make_mode](const ModelSpec& s, const std::string& mode, const Domain& d, const std::vector<double>& x0,
                  double eps, int n, double horizon, std::uint64_t seed, double dt, int workers,
                  const std::vector<double>& xs, int particles) {
        const SimulationMode sm = make_mode(mode, xs.empty() ? x0 : xs, particles);
        ExitOptions options;
        options.workers = workers;
        py::gil_scoped_release release;
        return run_exit_trials(s, sm, d, to_vec(x0), eps, n, horizon, NoisePlan(seed, dt), options);
      },
      py::arg("model"), py::arg("mode"), py::arg("domain"), py::arg("x0"), py::arg("epsilon"), py::arg("n_trials"),
      py::arg("max_horizon"), py::arg("seed"), py::arg("dt") = 0.01, py::arg("workers") = 1,
      py::arg("x_stable") = std::vector<double>{}, py::arg("particles") = 100);

  m.def(
      "exit_statistics",
      [](const std::vector<ExitRecord>& records, const Domain& d, int bins) {
        ExitStatisticsOptions options;
        options.bins = bins;
        const auto s = exit_statistics(records, d, options);
        py::dict out;
        out["n_trials"] = s.n_trials;
        out["n_censored"] = s.n_censored;
        out["mean_exit_time"] = s.mean_exit_time;
        out["stderr"] = s.stderr_;
        out["restricted_mean"] = s.restricted_mean;
        out["restricted_stderr"] = s.restricted_stderr;
        out["median_exit_time"] = s.median_exit_time;
        out["bin_edges"] = s.bin_edges;
        out["histogram"] = s.histogram;
        out["note"] = s.note;
        return out;
      },
      py::arg("records"), py::arg("domain"), py::arg("bins") = 36);

  m.def(
      "kramers_fit",
      [](const std::vector<std::tuple<double, double, double>>& series) {
        std::vector<KramersPoint> points;
        for (const auto& [eps, mean, se] : series) points.push_back({eps, mean, se});
        const auto f = kramers_fit(points);
        py::dict out;
        out["quasipotential"] = f.quasipotential;
        out["intercept"] = f.intercept;
        out["slope_stderr"] = f.slope_stderr;
        out["weighted"] = f.weighted;
        out["residuals"] = f.residuals;
        return out;
      },
      py::arg("series"));

  // --- configs and commands ---------------------------------------------
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_static("parse", &ScenarioConfig::parse, py::arg("text"), py::arg("origin") = "<string>")
      .def_static("load", &ScenarioConfig::load, py::arg("path"))
      .def_static("builtin", &ScenarioConfig::builtin, py::arg("name"))
      .def_static("builtin_names", &ScenarioConfig::builtin_names)
      .def("set", &ScenarioConfig::set, py::arg("assignment"))
      .def("get", &ScenarioConfig::get, py::arg("section"), py::arg("key"))
      .def("resolved_text", &ScenarioConfig::resolved_text)
      .def_property_readonly("name", &ScenarioConfig::name)
      .def_property_readonly("model", &ScenarioConfig::model)
      .def_property_readonly("domain", &ScenarioConfig::domain);

  m.def(
      "run_command",
      [](const std::string& name, const ScenarioConfig& config, const std::filesystem::path& out_dir,
         bool closed_form_only) {
        cli::RunFlags flags;
        flags.out_dir = out_dir;
        flags.closed_form_only = closed_form_only;
        std::ostringstream out;
        cli::CommandResult r;
        {
          py::gil_scoped_release release;
          r = cli::run_command(name, config, flags, out);
        }
        return py::make_tuple(r.status, out.str(), r.outputs);
      },
      py::arg("name"), py::arg("config"), py::arg("out_dir") = ".", py::arg("closed_form_only") = false);
}
