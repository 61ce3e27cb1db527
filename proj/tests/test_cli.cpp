#include "doctest.h"

#include "selfstab/cli.hpp"
#include "selfstab/expr.hpp"
#include "selfstab/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace selfstab;
namespace fs = std::filesystem;

namespace {

const char* const kOu = R"(
[model]
dim = 1
potential = 0.5*x1^2
phi = u

[domain]
kind = interval
lower = -1
upper = 1
)";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("selfstab_test_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

cli::CommandResult run(const std::string& command, const ScenarioConfig& c, const fs::path& dir,
                       std::string* printed = nullptr, bool closed_form = false) {
  cli::RunFlags flags;
  flags.out_dir = dir;
  flags.closed_form_only = closed_form;
  std::ostringstream out;
  auto r = cli::run_command(command, c, flags, out);
  if (printed) *printed = out.str();
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("quasipotential, closed form only, on the planar scenario") {
  TempDir dir("qp");
  std::string printed;
  const auto r = run("quasipotential", ScenarioConfig::builtin("paper-5.2"), dir.path, &printed, true);
  CHECK(r.status == 0);
  CHECK(printed.find("Qbar = 16") != std::string::npos);
  CHECK(printed.find("numeric") == std::string::npos);
  const auto rows = csv_rows(dir.path / "quasipotential.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"variant", "method", "value", "best_horizon", "interior_minimum", "z1",
                                            "z2", "boundary_param"});
  int limiting = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] != "limiting") continue;
    ++limiting;
    CHECK(std::abs(std::stod(rows[i][2]) - 16.0) <= 1e-9);
    CHECK(std::abs(std::abs(std::stod(rows[i][5])) - 1.0) <= 1e-6);
    CHECK(std::abs(std::stod(rows[i][6])) <= 1e-6);
  }
  CHECK(limiting == 2);
  CHECK(fs::exists(dir.path / "quasipotential.resolved.ini"));
}

TEST_CASE("simulate without noise is the Euler recursion of the flow") {
  TempDir dir("sim");
  auto c = ScenarioConfig::parse(kOu);
  c.set("simulate.epsilon=0");
  c.set("simulate.x0=0.5");
  c.set("simulate.horizon=1");
  c.set("simulate.dt=0.01");
  run("simulate", c, dir.path);
  std::ifstream in(dir.path / "paths.csv");
  const auto paths = read_path_csv(in);
  REQUIRE(paths.size() == 1);
  REQUIRE(paths[0].steps() == 100);
  double x = 0.5;
  for (std::size_t k = 0; k <= 100; ++k) {
    CHECK(std::abs(paths[0].states[k](0) - x) <= 1e-15);
    x -= 0.01 * x;
  }
  const std::string first = slurp(dir.path / "paths.csv");
  c.set("scenario.seed=99");
  run("simulate", c, dir.path);
  CHECK(slurp(dir.path / "paths.csv") == first);
}

TEST_CASE("kramers echoes the exponent of exact data") {
  TempDir dir("kramers");
  {
    std::ofstream out(dir.path / "exact.csv");
    out << "epsilon,n_trials,n_censored,mean_exit_time,stderr,eps_log_mean\n";
    for (double eps : {0.2, 0.25, 0.3, 0.4}) {
      out << format_number(eps) << ",100,0," << format_number(std::exp(1.45 / eps)) << ",0,1.45\n";
    }
  }
  auto c = ScenarioConfig::builtin("paper-5.1");
  c.set("kramers.input=" + (dir.path / "exact.csv").string());
  run("kramers", c, dir.path);
  const std::string fit = slurp(dir.path / "kramers_fit.json");
  const auto pos = fit.find("\"quasipotential\": ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::abs(std::stod(fit.substr(pos + 18)) - 1.45) <= 1e-12);
}

TEST_CASE("reruns and reruns from the sidecar are byte-identical") {
  TempDir a("rerun_a"), b("rerun_b"), s("rerun_sidecar");
  auto c = ScenarioConfig::builtin("paper-5.2");
  c.set("exit.trials=12");
  c.set("exit.epsilons=2");
  run("exit", c, a.path);
  c.set("scenario.workers=3");
  run("exit", c, b.path);
  const auto sidecar = ScenarioConfig::load(a.path / "exit.resolved.ini");
  run("exit", sidecar, s.path);
  for (const char* f : {"exits_classical_eps2.csv", "exits_limiting_eps2.csv", "exit_summary.csv"}) {
    CAPTURE(f);
    const std::string reference = slurp(a.path / f);
    CHECK_FALSE(reference.empty());
    CHECK(slurp(b.path / f) == reference);
    CHECK(slurp(s.path / f) == reference);
  }
  CHECK(slurp(a.path / "exits_classical_eps2.csv")
            .starts_with("trial,seed,exit_time,exit_x1,exit_x2,boundary_param,censored\n"));
}

TEST_CASE("check-model reports failures through the status") {
  TempDir dir("check");
  auto text = std::string(kOu);
  text.replace(text.find("phi = u"), 7, "phi = -u");
  const auto bad = ScenarioConfig::parse(text);
  std::string printed;
  CHECK(run("check-model", bad, dir.path, &printed).status != 0);
  CHECK(printed.find("FAIL  profile_monotone") != std::string::npos);
  CHECK(run("check-model", ScenarioConfig::parse(kOu), dir.path).status == 0);
  CHECK(slurp(dir.path / "model_report.json").find("\"assumptions\"") != std::string::npos);
  CHECK_THROWS_AS(run("plot", ScenarioConfig::parse(kOu), dir.path), PreconditionError);
}

TEST_CASE("error lines and exit statuses") {
  const ConfigError config("exit.trials", "must be positive");
  CHECK(cli::error_line(config) ==
        R"({"error":{"kind":"config","key":"exit.trials","message":"exit.trials: must be positive"}})");
  CHECK(cli::exit_status(config) == 2);
  CHECK(cli::exit_status(ModelError("m")) == 3);
  CHECK(cli::exit_status(PreconditionError("p")) == 4);
  CHECK(cli::exit_status(DivergenceError("d")) == 5);
  CHECK(cli::exit_status(ConvergenceError("c")) == 6);
  CHECK(cli::exit_status(std::runtime_error("x")) == 1);
  try {
    expr::parse("x1 +", 1);
    FAIL("no syntax error");
  } catch (const std::exception& e) {
    CHECK(cli::exit_status(e) == 7);
    CHECK(cli::error_line(e).starts_with(R"({"error":{"kind":"syntax","offset":4,)"));
  }
}
