#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "birkhoff/errors.hpp"

namespace birkhoff::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace

json write_outputs(const ExperimentConfig& cfg, const CommandOutput& out) {
  const fs::path dir = cfg.output();
  fs::create_directories(dir);
  const std::string command = cfg.command();

  std::vector<OutputFile> files = out.files;
  files.push_back({command + ".json", out.summary.dump(2) + "\n"});

  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["command"] = command;
  manifest["config_hash"] = sha256_hex(cfg.dump());
  manifest["seed"] = cfg.seed();
  manifest["config"] = cfg.doc;
  manifest["files"] = json::array();
  for (const OutputFile& f : files)
    manifest["files"].push_back({{"name", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
  manifest["verdicts"] = out.verdicts;

  for (const OutputFile& f : files) write_atomic(dir / f.name, f.content);
  write_atomic(dir / (command + ".manifest.json"), manifest.dump(2) + "\n");
  return manifest;
}

json merge_reports(const std::vector<std::string>& manifest_paths) {
  json report;
  report["tool_version"] = kToolVersion;
  report["runs"] = json::array();
  report["verdicts"] = json::object();
  json sources = json::object();
  std::vector<std::string> conflicts;
  for (const std::string& path : manifest_paths) {
    const json m = read_json_file(path);
    if (!m.is_object() || !m.contains("tool_version") || !m.contains("verdicts"))
      throw ConfigError("'" + path + "' is not a run manifest");
    if (m.at("tool_version") != kToolVersion)
      throw ConfigError("version mismatch: '" + path + "' was written by version " +
                        m.at("tool_version").get<std::string>() + ", this tool is " + kToolVersion);
    report["runs"].push_back({{"manifest", path}, {"command", m.value("command", "")}, {"config_hash", m.value("config_hash", "")}});
    for (const auto& [key, val] : m.at("verdicts").items()) {
      if (report["verdicts"].contains(key)) {
        if (report["verdicts"][key] != val)
          conflicts.push_back(key + ": " + report["verdicts"][key].dump() + " from '" + sources[key].get<std::string>() +
                              "' vs " + val.dump() + " from '" + path + "'");
        continue;
      }
      report["verdicts"][key] = val;
      sources[key] = path;
    }
  }
  if (!conflicts.empty()) {
    std::ostringstream os;
    os << "conflicting verdicts:";
    for (const std::string& c : conflicts) os << "\n  " << c;
    throw ConfigError(os.str());
  }
  report["sources"] = sources;
  return report;
}

}  // namespace birkhoff::cli
