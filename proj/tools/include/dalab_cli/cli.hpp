#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dalab/torus.hpp"

namespace dalab::cli {

using json = nlohmann::ordered_json;

// Message names the offending field, e.g. "lyapunov.n: must be >= 100".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Typed access to one command section. Every value read is echoed into
// `resolved` so the manifest records the effective configuration.
class Params {
 public:
  Params(std::string prefix, json section);

  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi);
  double real(const std::string& key, double def, double lo, double hi);
  bool flag(const std::string& key, bool def);
  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {});
  std::vector<double> reals(const std::string& key, const std::vector<double>& def, double lo, double hi);
  std::vector<std::int64_t> integers(const std::string& key, const std::vector<std::int64_t>& def, std::int64_t lo,
                                     std::int64_t hi);
  // Point of the torus given as an array, or empty when absent/null.
  std::vector<double> point(const std::string& key, int dim);

  const json& resolved() const { return resolved_; }
  // Keys present in the section that were never read.
  std::vector<std::string> unused() const;
  // Throws on the first unknown key; commands call it once all parameters are read.
  void finish() const;

 private:
  std::string field(const std::string& key) const { return prefix_ + "." + key; }
  const json* find(const std::string& key);
  std::string prefix_;
  json section_;
  json resolved_ = json::object();
  std::vector<std::string> read_;
};

struct Settings {
  std::string command;
  json config = json::object();  // file contents with overrides applied
  std::optional<std::uint64_t> seed;  // required by stochastic commands
  int threads = 1;
  std::filesystem::path out = "dalab-out";
};

// Map from the "map" section: either {"file": path} or construction parameters.
DeformedMap map_from_config(const json& section, json& resolved);

struct Artifact {
  std::string name;
  std::string content;
};

struct CommandResult {
  json summary = json::object();  // command-specific results
  bool pass = true;
  std::vector<Artifact> files;     // CSV detail
  std::vector<std::string> log;    // lines for the run log
};

struct CommandContext {
  const DeformedMap& map;
  Params& params;
  std::uint64_t seed;
  int threads;
};

struct CommandInfo {
  std::string name;
  std::string claim;  // what the command probes, in words
  bool stochastic = true;
  std::function<CommandResult(CommandContext&)> run;
};

const std::vector<CommandInfo>& commands();
const CommandInfo* find_command(const std::string& name);

// Runs a command and writes summary.json, manifest.json, CSV files and run.log
// under settings.out. Returns the process exit code: 0 pass, 2 threshold
// failure, 1 error (message on err).
int execute(const Settings& settings, std::ostream& err);

// Parses argv (CLI11) and calls execute.
int main_entry(int argc, char** argv);

std::string version_string();

}  // namespace dalab::cli
