#pragma once

// Experiment configuration: one JSON document naming the system, the
// observable and the command parameters. Loading fills every default
// explicitly, so a normalized config serializes to itself.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/dynamics.hpp"
#include "birkhoff/primitive.hpp"
#include "birkhoff/torus.hpp"
#include "json.hpp"

namespace birkhoff::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Subcommands that run a module pipeline.
const std::vector<std::string>& run_commands();
bool is_run_command(const std::string& name);
/// Commands on the torus (matrix systems) rather than interval maps.
bool is_torus_command(const std::string& name);

struct ExperimentConfig {
  json doc;  ///< normalized document

  std::string command() const;
  const json& params() const { return doc.at("params"); }
  std::uint64_t seed() const { return doc.at("seed").get<std::uint64_t>(); }
  int threads() const { return doc.at("threads").get<int>(); }
  std::string output() const { return doc.at("output").get<std::string>(); }
  std::string dump() const { return doc.dump(2) + "\n"; }
};

/// Fills defaults and checks structure; every problem is appended to errors.
/// command may be empty, in which case the document's "command" key is used.
json normalize(const json& raw, const std::string& command, std::vector<std::string>& errors);

/// Parses and normalizes; throws ConfigError listing every problem.
ExperimentConfig load_config(const json& raw, const std::string& command);
json read_json_file(const std::string& path);

// Builders from normalized sections (throw ConfigError or PreconditionError).
PiecewiseMap build_map(const json& system);
AnalysisOptions build_analysis(const json& analysis);
PiecewiseFunction build_observable(const json& terms, double a, double b);
torus::IntMatrix build_matrix(const json& system);
torus::TrigPolynomial build_trig(const json& terms, int dim);

}  // namespace birkhoff::cli
