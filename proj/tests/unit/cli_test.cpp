#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "birkhoff/errors.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/manifest.hpp"

using namespace birkhoff;
using namespace birkhoff::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("birkhoff_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

json minimal(const std::string& out) {
  return {{"system", {{"map", "doubling"}}}, {"observable", json::array({{{"kind", "cos"}}})}, {"output", out}};
}

}  // namespace

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, MinimalConfigIsFullyDefaulted) {
  std::vector<std::string> errors;
  const json doc = normalize(minimal("o"), "primitive", errors);
  EXPECT_TRUE(errors.empty());
  EXPECT_EQ(doc.at("analysis").at("bins"), 1024);
  EXPECT_EQ(doc.at("params").at("grid"), 257);
  EXPECT_EQ(doc.at("observable")[0].at("amplitude"), 1.0);
  EXPECT_EQ(doc.at("seed"), 12345);
}

TEST(Config, NormalizedFormRoundTrips) {
  for (const std::string& cmd : run_commands()) {
    json raw = is_torus_command(cmd) ? json{{"system", {{"matrix", "cat"}}},
                                            {"observable", json::array({{{"kind", "cos"}, {"k", {1, 1}}}})}}
                                     : minimal("o");
    std::vector<std::string> e1, e2;
    const json once = normalize(raw, cmd, e1);
    const json twice = normalize(json::parse(once.dump()), cmd, e2);
    EXPECT_TRUE(e1.empty()) << cmd;
    EXPECT_EQ(once.dump(), twice.dump()) << cmd;
  }
}

TEST(Config, ErrorsAreAggregated) {
  json raw = minimal("o");
  raw["params"] = {{"bogus", 1}, {"grid", "many"}};
  raw["surprise"] = true;
  raw["observable"].push_back({{"kind", "wavelet"}});
  std::vector<std::string> errors;
  normalize(raw, "primitive", errors);
  EXPECT_EQ(errors.size(), 4u);
  EXPECT_THROW(load_config(raw, "primitive"), ConfigError);
}

TEST(Config, UnknownSubcommand) {
  std::vector<std::string> errors;
  normalize(minimal("o"), "frobnicate", errors);
  ASSERT_FALSE(errors.empty());
  EXPECT_NE(errors.front().find("unknown subcommand"), std::string::npos);
}

TEST(Validate, ReportsMeanAndExpansionTogether) {
  json raw = {{"system", {{"map", {{"branches", json::array({{{"lo", 0}, {"hi", 1}, {"slope", 1}}})}}}}},
              {"observable", json::array({{{"kind", "const"}, {"value", 1}}})},
              {"params", {{"bogus", 1}}}};
  const auto errors = validate_config(raw, "primitive", nullptr);
  ASSERT_EQ(errors.size(), 2u);  // unknown parameter, non-expanding branch
  json raw2 = minimal("o");
  raw2["observable"] = json::array({{{"kind", "const"}, {"value", 1}}});
  const auto errors2 = validate_config(raw2, "variance", nullptr);
  ASSERT_EQ(errors2.size(), 1u);
  EXPECT_NE(errors2[0].find("zero-mean"), std::string::npos);
}

TEST(Validate, TorusChecks) {
  json raw = {{"system", {{"matrix", json::array({json::array({1, 1}), json::array({0, 1})})}}}};
  EXPECT_EQ(validate_config(raw, "deform", nullptr).size(), 1u);
  json mean = {{"system", {{"matrix", "cat"}}}, {"observable", json::array({{{"kind", "const"}, {"value", 1}}})}};
  EXPECT_EQ(validate_config(mean, "anosov-blocks", nullptr).size(), 1u);
}

TEST(Run, PrimitiveOfZeroIsZero) {
  json raw = minimal("o");
  raw["observable"] = json::array();
  raw["params"] = {{"grid", 9}};
  const CommandOutput out = run_command(load_config(raw, "primitive"));
  ASSERT_EQ(out.files.size(), 1u);
  std::istringstream csv(out.files[0].content);
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    EXPECT_NE(line.find(",0,0"), std::string::npos) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 9);
}

TEST(Run, SpectrumOfDoubling) {
  const json raw = {{"system", {{"map", "doubling"}}}};
  const CommandOutput out = run_command(load_config(raw, "spectrum"));
  EXPECT_EQ(out.summary.at("period"), 1);
  EXPECT_EQ(out.summary.at("components"), 1);
  EXPECT_EQ(out.summary.at("eigenvalues").size(), 1u);
}

TEST(Run, PropLMaxIsTwo) {
  const json raw = {{"system", {{"matrix", "cat"}}}};
  const CommandOutput out = run_command(load_config(raw, "prop-l"));
  EXPECT_EQ(out.summary.at("max_count"), 2);
}

TEST(Run, PreconditionFailureWritesNothing) {
  const fs::path dir = scratch("precondition");
  json raw = minimal(dir.string());
  raw["observable"] = json::array({{{"kind", "const"}, {"value", 1}}});
  const ExperimentConfig cfg = load_config(raw, "primitive");
  EXPECT_THROW(write_outputs(cfg, run_command(cfg)), PreconditionError);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Manifest, RerunsReproduceChecksums) {
  const fs::path d1 = scratch("rerun");
  json raw = {{"system", {{"matrix", "cat"}}},
              {"observable", json::array({{{"kind", "cos"}, {"k", {1, 1}}}})},
              {"output", d1.string()}};
  const ExperimentConfig cfg = load_config(raw, "advect");
  const json m1 = write_outputs(cfg, run_command(cfg));
  const json m2 = write_outputs(cfg, run_command(cfg));
  EXPECT_EQ(m1.dump(), m2.dump());
  std::ifstream in(d1 / "advect.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(m1.at("files")[0].at("sha256"), sha256_hex(ss.str()));
}

TEST(Report, MergesConflictsAndVersions) {
  EXPECT_EQ(merge_reports({}).at("verdicts").size(), 0u);
  const fs::path dir = scratch("report");
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const json& j) {
    std::ofstream(dir / name) << j.dump();
    return (dir / name).string();
  };
  const std::string a = write("a.json", {{"tool_version", kToolVersion}, {"verdicts", {{"k", "x"}}}});
  const std::string b = write("b.json", {{"tool_version", kToolVersion}, {"verdicts", {{"k", "y"}}}});
  const std::string c = write("c.json", {{"tool_version", "0.0.1"}, {"verdicts", json::object()}});
  EXPECT_EQ(merge_reports({a}).at("verdicts").at("k"), "x");
  EXPECT_EQ(merge_reports({a, a}).at("verdicts").size(), 1u);
  try {
    merge_reports({a, b});
    FAIL() << "conflict not reported";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a.json"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("b.json"), std::string::npos);
  }
  EXPECT_THROW(merge_reports({a, c}), ConfigError);
}
