#pragma once

#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/manifest.hpp"

namespace birkhoff::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,        ///< unknown subcommand, malformed or inconsistent config
  kPreconditionError = 3,  ///< a module precondition does not hold
  kNumericalError = 4,     ///< a computation could not certify its result
  kIoError = 5,            ///< files could not be read or written, other failures
};

/// Runs a module pipeline in memory; nothing is written.
CommandOutput run_command(const ExperimentConfig& cfg);

/// Config errors plus the cheap mathematical checks (orthogonality of the
/// observable, expansion of the map, hyperbolicity or zero mean on the
/// torus), all collected rather than stopping at the first.
std::vector<std::string> validate_config(const json& raw, const std::string& command, json* normalized);

/// "%.17g" formatting used in every CSV.
std::string fmt(double v);

}  // namespace birkhoff::cli
