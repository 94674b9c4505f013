#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dalab/torus.hpp"

namespace dalab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> numbers(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error("map spec: field '" + key + "' has a non-numeric entry '" + tok + "'");
    }
  }
  return out;
}

std::vector<std::vector<double>> rows_of(const std::string& key, const std::string& v) {
  std::vector<std::vector<double>> out;
  std::istringstream is(v);
  std::string row;
  while (std::getline(is, row, ';')) {
    if (trim(row).empty()) continue;
    out.push_back(numbers(key, row));
  }
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("map spec: field '" + key + "' must be true or false");
}

double scalar(const std::string& key, const std::string& v) {
  const auto xs = numbers(key, v);
  if (xs.size() != 1) throw Error("map spec: field '" + key + "' must be a single number");
  return xs[0];
}

Vec vec_of(const std::vector<double>& xs) {
  Vec v(static_cast<int>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v(static_cast<int>(i)) = xs[i];
  return v;
}

}  // namespace

std::string serialize_map(const DeformedMap& m) {
  std::ostringstream os;
  const int n = m.dim();
  os << "# dalab map specification\n";
  os << "dimension = " << n << "\n";
  os << "matrix =";
  const auto& rows = m.base().integer_matrix();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) os << " " << rows[i][j];
    if (i + 1 < n) os << ";";
  }
  os << "\n";
  const auto& o = m.options();
  os << "conservative = " << (o.conservative ? "true" : "false") << "\n";
  os << "integrator_step = " << fmt(o.integrator_step) << "\n";
  os << "dissipation = " << fmt(o.dissipation) << "\n";
  os << "delta0 = " << fmt(o.delta0) << "\n";
  os << "max_radius_fraction = " << fmt(o.max_radius_fraction) << "\n";
  os << "q =";
  for (int i = 0; i < n; ++i) os << " " << fmt(m.distinguished_point()[i]);
  os << "\n";
  os << "sites = " << m.sites().size() << "\n";
  for (std::size_t k = 0; k < m.sites().size(); ++k) {
    const auto& s = m.sites()[k];
    const std::string p = "site." + std::to_string(k) + ".";
    os << p << "center =";
    for (int i = 0; i < n; ++i) os << " " << fmt(s.center[i]);
    os << "\n" << p << "radius = " << fmt(s.radius) << "\n";
    os << p << "mode = " << to_string(s.mode) << "\n";
    os << p << "strength = " << fmt(s.strength) << "\n";
    os << p << "rate = " << fmt(s.rate) << "\n";
    os << p << "plane =";
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < n; ++i) os << " " << fmt(s.plane(i, c));
      if (c == 0) os << ";";
    }
    os << "\n";
  }
  return os.str();
}

DeformedMap parse_map(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("map spec: line " + std::to_string(lineno) + " lacks '='");
    const std::string key = trim(line.substr(0, eq));
    if (kv.count(key)) throw Error("map spec: duplicate field '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  std::map<std::string, bool> used;
  auto take = [&](const std::string& k) -> const std::string* {
    auto it = kv.find(k);
    if (it == kv.end()) return nullptr;
    used[k] = true;
    return &it->second;
  };
  auto require = [&](const std::string& k) -> const std::string& {
    const std::string* v = take(k);
    if (!v) throw Error("map spec: missing field '" + k + "'");
    return *v;
  };

  MapOptions opt;
  if (auto v = take("conservative")) opt.conservative = boolean("conservative", *v);
  if (auto v = take("integrator_step")) opt.integrator_step = scalar("integrator_step", *v);
  if (auto v = take("dissipation")) opt.dissipation = scalar("dissipation", *v);
  if (auto v = take("delta0")) opt.delta0 = scalar("delta0", *v);
  if (auto v = take("max_radius_fraction")) opt.max_radius_fraction = scalar("max_radius_fraction", *v);
  const int n = static_cast<int>(scalar("dimension", require("dimension")));

  std::optional<IntMatrix> matrix;
  if (auto v = take("matrix")) {
    IntMatrix rows;
    for (const auto& r : rows_of("matrix", *v)) {
      std::vector<long long> ri;
      for (double x : r) {
        if (x != std::round(x)) throw Error("map spec: field 'matrix' must hold integers");
        ri.push_back(static_cast<long long>(x));
      }
      rows.push_back(ri);
    }
    if (static_cast<int>(rows.size()) != n) throw Error("map spec: field 'matrix' must have 'dimension' rows");
    matrix = rows;
  }

  std::optional<DeformedMap> out;
  if (auto preset = take("preset")) {
    if (*preset != "example") throw Error("map spec: field 'preset' must be 'example'");
    ExampleParams p;
    p.n = n;
    p.matrix = matrix;
    p.options = opt;
    if (auto v = take("delta")) p.delta = scalar("delta", *v);
    p.delta0 = opt.delta0;
    if (auto v = take("strength")) p.strengths = {scalar("strength", *v)};
    if (auto v = take("strengths")) p.strengths = numbers("strengths", *v);
    out.emplace(build_example(p));
  } else {
    if (!matrix) throw Error("map spec: missing field 'matrix'");
    std::optional<TorusPoint> q;
    if (auto v = take("q")) q = wrap(vec_of(numbers("q", *v)));
    const int count = kv.count("sites") ? static_cast<int>(scalar("sites", require("sites"))) : 0;
    std::vector<DeformationSite> sites;
    for (int k = 0; k < count; ++k) {
      const std::string p = "site." + std::to_string(k) + ".";
      DeformationSite s;
      s.center = wrap(vec_of(numbers(p + "center", require(p + "center"))));
      s.radius = scalar(p + "radius", require(p + "radius"));
      s.mode = site_mode_from_string(require(p + "mode"));
      s.strength = scalar(p + "strength", require(p + "strength"));
      s.rate = scalar(p + "rate", require(p + "rate"));
      const auto pr = rows_of(p + "plane", require(p + "plane"));
      if (pr.size() != 2) throw Error("map spec: field '" + p + "plane' needs two vectors");
      s.plane = Mat(n, 2);
      for (int c = 0; c < 2; ++c) {
        if (static_cast<int>(pr[c].size()) != n) throw Error("map spec: field '" + p + "plane' has wrong length");
        for (int i = 0; i < n; ++i) s.plane(i, c) = pr[c][i];
      }
      sites.push_back(s);
    }
    out.emplace(LinearToralMap(*matrix), sites, opt, q);
  }
  for (const auto& [k, v] : kv)
    if (!used.count(k)) throw Error("map spec: unknown field '" + k + "'");
  return std::move(*out);
}

DeformedMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open map spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_map(ss.str());
}

void save_map(const DeformedMap& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write map spec '" + path + "'");
  out << serialize_map(m);
}

std::string map_hash(const DeformedMap& m) {
  const std::string s = serialize_map(m);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace dalab
