#pragma once

// Run manifests: every emitted file with its SHA-256, the hash of the
// normalized config, the seed and the verdicts, so re-runs can be diffed.

#include <string>
#include <vector>

#include "cli/config.hpp"

namespace birkhoff::cli {

std::string sha256_hex(const std::string& data);

struct OutputFile {
  std::string name;     ///< relative to the output directory
  std::string content;
};

/// Result of one command, fully in memory until it succeeds.
struct CommandOutput {
  json summary;                      ///< written as <command>.json
  std::vector<OutputFile> files;     ///< CSV tables
  json verdicts = json::object();    ///< machine-readable conclusions
};

/// Writes the files and <command>.manifest.json atomically (temp + rename)
/// and returns the manifest.
json write_outputs(const ExperimentConfig& cfg, const CommandOutput& out);

/// Consolidates manifests; throws ConfigError on version mismatch or on the
/// same verdict key carrying different values.
json merge_reports(const std::vector<std::string>& manifest_paths);

}  // namespace birkhoff::cli
