#include <algorithm>
#include <cmath>
#include <sstream>

#include "dalab_cli/cli.hpp"

namespace dalab::cli {

namespace {

std::string range_text(double lo, double hi) {
  std::ostringstream os;
  os << "[" << lo << ", " << hi << "]";
  return os.str();
}

}  // namespace

Params::Params(std::string prefix, json section) : prefix_(std::move(prefix)), section_(std::move(section)) {
  if (section_.is_null()) section_ = json::object();
  if (!section_.is_object()) throw ConfigError(prefix_ + ": must be an object");
}

const json* Params::find(const std::string& key) {
  read_.push_back(key);
  auto it = section_.find(key);
  if (it == section_.end() || it->is_null()) return nullptr;
  return &*it;
}

std::int64_t Params::integer(const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
  std::int64_t v = def;
  if (const json* j = find(key)) {
    if (j->is_number_integer())
      v = j->get<std::int64_t>();
    else if (j->is_number_float() && std::floor(j->get<double>()) == j->get<double>() &&
             std::abs(j->get<double>()) < 9e15)
      v = static_cast<std::int64_t>(j->get<double>());
    else
      throw ConfigError(field(key) + ": expected an integer");
  }
  if (v < lo || v > hi)
    throw ConfigError(field(key) + ": " + std::to_string(v) + " outside " + range_text(double(lo), double(hi)));
  resolved_[key] = v;
  return v;
}

double Params::real(const std::string& key, double def, double lo, double hi) {
  double v = def;
  if (const json* j = find(key)) {
    if (!j->is_number()) throw ConfigError(field(key) + ": expected a number");
    v = j->get<double>();
  }
  if (!std::isfinite(v) || v < lo || v > hi) throw ConfigError(field(key) + ": value outside " + range_text(lo, hi));
  resolved_[key] = v;
  return v;
}

bool Params::flag(const std::string& key, bool def) {
  bool v = def;
  if (const json* j = find(key)) {
    if (!j->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    v = j->get<bool>();
  }
  resolved_[key] = v;
  return v;
}

std::string Params::text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
  std::string v = def;
  if (const json* j = find(key)) {
    if (!j->is_string()) throw ConfigError(field(key) + ": expected a string");
    v = j->get<std::string>();
  }
  if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(field(key) + ": '" + v + "' is not one of " + list);
  }
  resolved_[key] = v;
  return v;
}

std::vector<double> Params::reals(const std::string& key, const std::vector<double>& def, double lo, double hi) {
  std::vector<double> v = def;
  if (const json* j = find(key)) {
    if (j->is_number()) {
      v = {j->get<double>()};
    } else if (j->is_array()) {
      v.clear();
      for (const auto& e : *j) {
        if (!e.is_number()) throw ConfigError(field(key) + ": expected an array of numbers");
        v.push_back(e.get<double>());
      }
    } else {
      throw ConfigError(field(key) + ": expected an array of numbers");
    }
  }
  if (v.empty()) throw ConfigError(field(key) + ": must not be empty");
  for (double x : v)
    if (!std::isfinite(x) || x < lo || x > hi) throw ConfigError(field(key) + ": entry outside " + range_text(lo, hi));
  resolved_[key] = v;
  return v;
}

std::vector<std::int64_t> Params::integers(const std::string& key, const std::vector<std::int64_t>& def,
                                           std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> v = def;
  if (const json* j = find(key)) {
    if (!j->is_array()) throw ConfigError(field(key) + ": expected an array of integers");
    v.clear();
    for (const auto& e : *j) {
      if (!e.is_number_integer()) throw ConfigError(field(key) + ": expected an array of integers");
      v.push_back(e.get<std::int64_t>());
    }
  }
  if (v.empty()) throw ConfigError(field(key) + ": must not be empty");
  for (auto x : v)
    if (x < lo || x > hi)
      throw ConfigError(field(key) + ": entry " + std::to_string(x) + " outside " + range_text(double(lo), double(hi)));
  resolved_[key] = v;
  return v;
}

std::vector<double> Params::point(const std::string& key, int dim) {
  const json* j = find(key);
  if (!j) {
    resolved_[key] = nullptr;
    return {};
  }
  if (!j->is_array() || static_cast<int>(j->size()) != dim)
    throw ConfigError(field(key) + ": expected an array of " + std::to_string(dim) + " numbers");
  std::vector<double> v;
  for (const auto& e : *j) {
    if (!e.is_number() || !std::isfinite(e.get<double>()))
      throw ConfigError(field(key) + ": expected an array of " + std::to_string(dim) + " numbers");
    v.push_back(e.get<double>());
  }
  resolved_[key] = v;
  return v;
}

std::vector<std::string> Params::unused() const {
  std::vector<std::string> out;
  for (auto it = section_.begin(); it != section_.end(); ++it)
    if (std::find(read_.begin(), read_.end(), it.key()) == read_.end()) out.push_back(it.key());
  return out;
}

void Params::finish() const {
  const auto extra = unused();
  if (!extra.empty()) throw ConfigError(field(extra.front()) + ": unknown field");
}

DeformedMap map_from_config(const json& section, json& resolved) {
  Params p("map", section);
  DeformedMap out = [&] {
    if (section.is_object() && section.contains("file")) {
      const std::string path = p.text("file", "");
      try {
        return load_map(path);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("map.file: ") + e.what());
      }
    }
    ExampleParams ep;
    ep.n = static_cast<int>(p.integer("n", 4, 2, kMaxDim));
    ep.delta = p.real("delta", 0.05, 1e-4, 0.125);
    ep.delta0 = p.real("delta0", 0.1, 0.0, 10.0);
    // half the largest passing strength from a 2000-sample bisection (0.133); 10^4 samples give 0.113
    ep.strengths = p.reals("strength", {0.066}, 0.0, 1.0);
    ep.options.conservative = p.flag("conservative", true);
    ep.options.dissipation = p.real("dissipation", 0.3, 0.0, 5.0);
    ep.options.integrator_step = p.real("integrator_step", 0.05, 1e-4, 1.0);
    ep.options.delta0 = ep.delta0;
    try {
      return build_example(ep);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("map: ") + e.what());
    }
  }();
  p.finish();
  resolved = p.resolved();
  return out;
}

}  // namespace dalab::cli
