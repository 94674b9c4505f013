#include <Eigen/Core>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dalab/parallel.hpp"
#include "dalab_cli/cli.hpp"

#ifndef DALAB_VERSION_STRING
#define DALAB_VERSION_STRING "0.0.0"
#endif

namespace dalab::cli {

namespace fs = std::filesystem;

std::string version_string() { return DALAB_VERSION_STRING; }

const CommandInfo* find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

json versions() {
  json v = json::object();
  v["dalab"] = version_string();
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  v["cli11"] = CLI11_VERSION;
#if defined(__clang__)
  v["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  v["compiler"] = "gcc " __VERSION__;
#else
  v["compiler"] = "unknown";
#endif
  v["cxx_standard"] = static_cast<long>(__cplusplus);
  return v;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

void check_top_level(const json& config) {
  if (!config.is_object()) throw ConfigError("config: must be a JSON object");
  for (auto it = config.begin(); it != config.end(); ++it) {
    const std::string& k = it.key();
    if (k == "map" || k == "seed" || k == "threads" || k == "out" || find_command(k)) continue;
    throw ConfigError(k + ": unknown field");
  }
}

}  // namespace

int execute(const Settings& settings, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const CommandInfo* cmd = find_command(settings.command);
    if (!cmd) throw ConfigError("command: unknown command '" + settings.command + "'");
    check_top_level(settings.config);
    if (cmd->stochastic && !settings.seed) throw ConfigError("seed: required for " + cmd->name);
    if (settings.threads < 1) throw ConfigError("threads: must be >= 1");
    const std::uint64_t seed = settings.seed.value_or(0);

    json map_resolved;
    const DeformedMap map =
        map_from_config(settings.config.contains("map") ? settings.config["map"] : json::object(), map_resolved);
    Params params(cmd->name, settings.config.contains(cmd->name) ? settings.config[cmd->name] : json::object());
    CommandContext ctx{map, params, seed, settings.threads};
    CommandResult res = cmd->run(ctx);
    params.finish();

    const std::string hash = map_hash(map);
    json summary = json::object();
    summary["command"] = cmd->name;
    summary["claim"] = cmd->claim;
    summary["pass"] = res.pass;
    summary["map_hash"] = hash;
    if (cmd->stochastic) summary["seed"] = seed;
    summary["params"] = params.resolved();
    summary["results"] = res.summary;

    json manifest = json::object();
    manifest["command"] = cmd->name;
    manifest["map_hash"] = hash;
    json cfg = json::object();
    cfg["map"] = map_resolved;
    if (cmd->stochastic) cfg["seed"] = seed;
    cfg["threads"] = settings.threads;
    cfg[cmd->name] = params.resolved();
    manifest["config"] = cfg;
    const std::string spec = serialize_map(map);
    json spec_lines = json::array();
    std::istringstream spec_in(spec);
    for (std::string line; std::getline(spec_in, line);) spec_lines.push_back(line);
    manifest["map_spec"] = spec_lines;
    manifest["versions"] = versions();
    json outputs = json::array({"summary.json", "manifest.json", "run.log", "map.txt"});
    for (const auto& f : res.files) outputs.push_back(f.name);
    manifest["outputs"] = outputs;

    fs::create_directories(settings.out);
    write_text(settings.out / "summary.json", summary.dump(2) + "\n");
    write_text(settings.out / "manifest.json", manifest.dump(2) + "\n");
    write_text(settings.out / "map.txt", spec);
    for (const auto& f : res.files) write_text(settings.out / f.name, f.content);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream log;
    log << "dalab " << version_string() << " " << cmd->name << "\n";
    log << "map " << hash << " dim " << map.dim() << " sites " << map.sites().size() << "\n";
    if (cmd->stochastic) log << "seed " << seed << "\n";
    log << "threads " << settings.threads << "\n";
    for (const auto& l : res.log) log << l << "\n";
    log << "result " << (res.pass ? "PASS" : "FAIL") << "\n";
    log << "elapsed " << secs << " s\n";
    write_text(settings.out / "run.log", log.str());
    return res.pass ? 0 : 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

// value parsed as JSON, falling back to a plain string
json parse_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

void apply_override(json& config, const std::string& command, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set '" + assignment + "': expected key=value");
  std::string key = assignment.substr(0, eq);
  const json value = parse_value(assignment.substr(eq + 1));
  std::string section = command;
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
    if (key.empty()) throw ConfigError("--set '" + assignment + "': empty key");
  }
  if (!config.contains(section) || config[section].is_null()) config[section] = json::object();
  if (!config[section].is_object()) throw ConfigError(section + ": must be an object");
  config[section][key] = value;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"Numerical lab for deformed Anosov maps of the torus"};
  app.set_version_flag("--version", version_string());
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)");
  app.add_option("--out", out, "output directory");
  app.add_option("--set", sets, "override key=value (command section, or section.key)")->take_all();
  app.require_subcommand(1);
  for (const auto& c : commands()) app.add_subcommand(c.name, c.claim)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  Settings s;
  s.command = app.get_subcommands().front()->get_name();
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      try {
        s.config = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ConfigError("--config: " + std::string(e.what()));
      }
    }
    if (!s.config.is_object()) throw ConfigError("config: must be a JSON object");
    for (const auto& a : sets) apply_override(s.config, s.command, a);
    if (seed) {
      s.seed = *seed;
    } else if (s.config.contains("seed")) {
      if (!s.config["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
      s.seed = s.config["seed"].get<std::uint64_t>();
    }
    int t = 1;
    if (threads) {
      t = *threads;
    } else if (s.config.contains("threads")) {
      if (!s.config["threads"].is_number_integer()) throw ConfigError("threads: expected an integer");
      t = s.config["threads"].get<int>();
    }
    if (t < 0) throw ConfigError("threads: must be >= 0");
    s.threads = t == 0 ? default_threads() : t;
    if (!out.empty()) {
      s.out = out;
    } else if (s.config.contains("out")) {
      if (!s.config["out"].is_string()) throw ConfigError("out: expected a string");
      s.out = s.config["out"].get<std::string>();
    } else {
      s.out = fs::path("dalab-out") / s.command;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  const int code = execute(s, std::cerr);
  if (code != 1)
    std::cout << s.command << ": " << (code == 0 ? "PASS" : "FAIL") << " (" << (s.out / "summary.json").string()
              << ")\n";
  return code;
}

}  // namespace dalab::cli
