// Command-line experiment runner: one subcommand per module pipeline plus
// validate and report. See README.md for the config format and exit codes.

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "birkhoff/errors.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/manifest.hpp"

namespace {

using namespace birkhoff;
using namespace birkhoff::cli;

struct RunFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_run_flags(CLI::App* sub, RunFlags& f, bool required_config) {
  auto* c = sub->add_option("--config", f.config, "experiment config (JSON)")->envname("BIRKHOFF_CONFIG");
  if (required_config) c->required();
  sub->add_option("--out", f.out, "output directory")->envname("BIRKHOFF_OUT");
  sub->add_option("--seed", f.seed, "random seed")->envname("BIRKHOFF_SEED");
  sub->add_option("--threads", f.threads, "worker threads (0 = all cores)")->envname("BIRKHOFF_THREADS");
}

json apply_overrides(json raw, const RunFlags& f) {
  if (!raw.is_object()) return raw;
  if (f.out) raw["output"] = *f.out;
  if (f.seed) raw["seed"] = *f.seed;
  if (f.threads) raw["threads"] = *f.threads;
  return raw;
}

int run(const std::string& command, const RunFlags& f) {
  const ExperimentConfig cfg = load_config(apply_overrides(read_json_file(f.config), f), command);
  const CommandOutput out = run_command(cfg);
  const json manifest = write_outputs(cfg, out);
  std::cout << "wrote " << manifest.at("files").size() << " file(s) to " << cfg.output() << "\n";
  if (!out.verdicts.empty()) std::cout << out.verdicts.dump(2) << "\n";
  return kSuccess;
}

int validate(const std::string& command, const RunFlags& f) {
  json normalized;
  const auto errors = validate_config(apply_overrides(read_json_file(f.config), f), command, &normalized);
  if (!errors.empty()) {
    std::cerr << errors.size() << " problem(s):\n";
    for (const std::string& e : errors) std::cerr << "  " << e << "\n";
    return kConfigError;
  }
  std::cout << normalized.dump(2) << "\n";
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birkhoff sums of expanding maps and toral automorphisms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunFlags flags;
  std::string chosen;
  for (const std::string& name : run_commands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
    add_run_flags(sub, flags, true);
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::string validate_command;
  auto* val = app.add_subcommand("validate", "normalize a config and report every problem");
  add_run_flags(val, flags, true);
  val->add_option("--command", validate_command, "subcommand the config is meant for");
  val->callback([&] { chosen = "validate"; });

  std::vector<std::string> manifests;
  std::optional<std::string> report_out;
  auto* rep = app.add_subcommand("report", "merge run manifests into one summary");
  rep->add_option("manifests", manifests, "manifest files");
  rep->add_option("--out", report_out, "write the summary here instead of stdout");
  rep->callback([&] { chosen = "report"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    if (chosen == "validate") return validate(validate_command, flags);
    if (chosen == "report") {
      const json summary = merge_reports(manifests);
      if (report_out) {
        std::ofstream out(*report_out);
        if (!out) throw std::runtime_error("cannot write '" + *report_out + "'");
        out << summary.dump(2) << "\n";
      } else {
        std::cout << summary.dump(2) << "\n";
      }
      return kSuccess;
    }
    return run(chosen, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return kPreconditionError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
}
