#pragma once

#include "selfstab/config.hpp"

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace selfstab::cli {

struct RunFlags {
  std::filesystem::path out_dir = ".";
  bool closed_form_only = false;  // quasipotential: skip the numeric minimization
};

struct CommandResult {
  int status = 0;  // 0 success, otherwise a failed check (see docs/cli.md)
  std::vector<std::filesystem::path> outputs;
};

/// check-model, flow, solve-drift, simulate, action, quasipotential, exit,
/// kramers, scenario.
const std::vector<std::string>& command_names();

/// Runs one subcommand against a resolved config. Human-readable progress
/// goes to `out`; files go under flags.out_dir, each written atomically,
/// plus the resolved config as `<command>.resolved.ini`.
CommandResult run_command(std::string_view name, const ScenarioConfig& config, const RunFlags& flags,
                          std::ostream& out);

/// One-line JSON description of a failure: {"error":{"kind":...,"message":...}}.
std::string error_line(const std::exception& e);
/// Process exit status for an exception (1 unknown, 2 config, 3 model,
/// 4 precondition, 5 divergence, 6 convergence, 7 expression).
int exit_status(const std::exception& e);

}  // namespace selfstab::cli
