// selfstab command-line front end.
//
//   selfstab [global flags] <subcommand> [config.ini | builtin-name]
//
// Global flags override the corresponding [scenario] keys; --set applies
// arbitrary "section.key=value" overrides after loading.

#include "selfstab/cli.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>

namespace {

selfstab::ScenarioConfig load(const std::string& source) {
  using selfstab::ScenarioConfig;
  for (const auto& name : ScenarioConfig::builtin_names()) {
    if (source == name) return ScenarioConfig::builtin(name);
  }
  if (!std::filesystem::exists(source)) {
    throw selfstab::ConfigError("", "no config file or built-in scenario named '" + source + "'");
  }
  return ScenarioConfig::load(source);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-stabilizing diffusions: exit problems, quasi-potentials and Monte Carlo"};
  app.require_subcommand(0, 1);

  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  bool closed_form = false;
  bool list_builtins = false;
  bool print_builtin = false;
  app.add_option("--seed", seed, "Base seed (overrides scenario.seed)");
  app.add_option("--workers", workers, "Worker threads for trial fan-out")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "Directory for output files");
  app.add_option("--set", overrides, "Override a config value: section.key=value (repeatable)");
  app.add_flag("--list-builtins", list_builtins, "List built-in scenarios and exit");

  std::string source;
  for (const auto& name : selfstab::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", source, "Config file or built-in scenario name")->required();
    if (name == "quasipotential" || name == "scenario") {
      sub->add_flag("--closed-form", closed_form, "Closed-form quasi-potential only (skip numeric minimization)");
    }
  }
  auto* show = app.add_subcommand("show-builtin", "Print a built-in scenario config");
  show->add_option("name", source)->required();
  show->callback([&] { print_builtin = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (list_builtins) {
    for (const auto& name : selfstab::ScenarioConfig::builtin_names()) std::cout << name << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (print_builtin) {
      std::cout << selfstab::ScenarioConfig::builtin_text(source);
      return 0;
    }
    auto config = load(source);
    if (seed) config.set("scenario.seed=" + std::to_string(*seed));
    if (workers) config.set("scenario.workers=" + std::to_string(*workers));
    for (const auto& o : overrides) config.set(o);
    selfstab::cli::RunFlags flags;
    flags.out_dir = out_dir;
    flags.closed_form_only = closed_form;
    const auto result = selfstab::cli::run_command(command, config, flags, std::cout);
    for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
    if (result.status != 0) {
      std::cout << R"({"error":{"kind":"check","message":")" << command << R"( reported a failed check"}})" << "\n";
    }
    return result.status;
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << selfstab::cli::error_line(e) << std::endl;
    return selfstab::cli::exit_status(e);
  }
}
