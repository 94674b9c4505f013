// Acceptance suite: one PASS/FAIL line per criterion, at full size.
//
//   dalab_acceptance [--only 1,5] [--threads N] [--expect-fail 9] [--out DIR]
//
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "dalab/parallel.hpp"
#include "dalab_cli/cli.hpp"

namespace fs = std::filesystem;
using dalab::cli::json;

namespace {

struct Run {
  int code = 1;
  json summary;
  double seconds = 0.0;
  std::string error;
  fs::path dir;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class Suite {
 public:
  Suite(fs::path out, int threads) : out_(std::move(out)), threads_(threads) {}

  // Runs a command once per key; later criteria reuse the result.
  const Run& run(const std::string& key, const std::string& command, const json& config, std::uint64_t seed = 1,
                 int threads = 0) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    dalab::cli::Settings s;
    s.command = command;
    s.config = config;
    s.seed = seed;
    s.threads = threads > 0 ? threads : threads_;
    s.out = out_ / key;
    fs::remove_all(s.out);
    std::ostringstream err;
    Run r;
    const auto t0 = std::chrono::steady_clock::now();
    r.code = dalab::cli::execute(s, err);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.error = err.str();
    r.dir = s.out;
    if (r.code != 1) r.summary = json::parse(slurp(s.out / "summary.json"));
    return cache_.emplace(key, std::move(r)).first->second;
  }

  int threads() const { return threads_; }

 private:
  fs::path out_;
  int threads_;
  std::map<std::string, Run> cache_;
};

const json& results(const Run& r) {
  static const json empty = json::object();
  return r.code == 1 ? empty : r.summary["results"];
}

double num(const json& j, const char* key) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : std::nan("");
}

bool flag(const json& j, const char* key) { return j.contains(key) && j[key].is_boolean() && j[key].get<bool>(); }

Outcome errored(const Run& r) { return {false, "command error: " + r.error}; }

const json kLinear = json::parse(R"({"map": {"strength": 0.0}})");

// ---------------------------------------------------------------------------

Outcome c1(Suite& s) {
  json cfg = kLinear;
  cfg["lyapunov"] = {{"n", 100000}, {"tolerance", 1e-3}};
  const Run& r = s.run("c1-lyapunov", "lyapunov", cfg);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  const bool fast = r.seconds < 10.0;
  return {flag(j, "oracle_pass") && r.code == 0 && fast,
          "max |lambda - log|eig|| " + fmt("%.3g", num(j, "oracle_deviation")) + " (tol 1e-3), " +
              fmt("%.2f s", r.seconds) + " (limit 10 s)"};
}

const Run& conditions_run(Suite& s) {
  json cfg = json::object();
  cfg["map-verify"] = {{"samples", 10000}, {"boundary_samples", 1000}};
  return s.run("c2-map-verify", "map-verify", cfg);
}

Outcome c2(Suite& s) {
  const Run& r = conditions_run(s);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  const bool ok = flag(j, "cone_invariance_pass") && flag(j, "outside_pass") && flag(j, "inside_pass") &&
                  flag(j, "volume_pass");
  return {ok && r.seconds < 30.0,
          "outside " + fmt("%.4f", std::max(num(j, "outside_cs_cone"), num(j, "outside_cu_inverse_cone"))) +
              " < sigma 0.9, inside " + fmt("%.4f", std::max(num(j, "inside_cs_cone"), num(j, "inside_cu_inverse_cone"))) +
              " < 1.1, |det|-1 " + fmt("%.2g", num(j, "det_error_max")) + ", " + fmt("%.1f s", r.seconds) +
              " (limit 30 s)"};
}

Outcome c3(Suite& s) {
  const Run& r = conditions_run(s);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  const double dom = num(j, "domination_max");
  const double cu = num(j, "cu_cone_ratio_max"), cs = num(j, "cs_cone_ratio_max");
  return {dom < 1.0 && cu < 1.0 && cs < 1.0,
          "max domination ratio " + fmt("%.4f", dom) + ", cone contraction cu " + fmt("%.4f", cu) + " cs " +
              fmt("%.4f", cs)};
}

Outcome c4(Suite& s) {
  json cfg = json::object();
  cfg["occupation"] = {{"starts", 1000}, {"n", 10000}, {"required_fraction", 0.99}, {"tail_n", {10, 20, 40}}};
  const Run& r = s.run("c4-occupation", "occupation", cfg);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  return {r.code == 0 && num(j, "eps_hat") > 0.0,
          "eps_hat " + fmt("%.4f", num(j, "eps_hat")) + ", fraction " + fmt("%.4f", num(j, "fraction_at_least_eps")) +
              ", tail slope " + fmt("%.4f", num(j, "tail_log_slope")) + " +- " +
              fmt("%.4f", num(j, "tail_log_slope_se"))};
}

Outcome c5(Suite& s) {
  json cfg = json::object();
  cfg["birkhoff"] = {{"starts", 1000}, {"n", 100000}, {"quantile", 0.99}, {"slack", 0.05}};
  const Run& r = s.run("c5-birkhoff", "birkhoff", cfg);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  return {r.code == 0 && r.seconds < 300.0,
          "c0 " + fmt("%.4f", num(j, "c0")) + " >= bound " + fmt("%.4f", num(j, "bound")) + " - 0.05, fraction " +
              fmt("%.3f", num(j, "fraction_below")) + ", " + fmt("%.0f s", r.seconds) + " (limit 300 s)"};
}

const Run& manifold_run(Suite& s) {
  json cfg = json::object();
  cfg["manifold"] = {{"samples", 100}, {"n", 50}, {"transform_steps", 20}};
  return s.run("c6-manifold", "manifold", cfg);
}

const Run& linear_manifold_run(Suite& s) {
  json cfg = kLinear;
  cfg["manifold"] = {{"samples", 100}, {"n", 50}, {"transform_steps", 20}};
  return s.run("c6-manifold-linear", "manifold", cfg);
}

Outcome c6(Suite& s) {
  const Run& r = manifold_run(s);
  const Run& l = linear_manifold_run(s);
  if (r.code == 1) return errored(r);
  if (l.code == 1) return errored(l);
  const json& j = results(r);
  const double theta = num(j, "theta_max"), gamma = num(j, "gamma_min"), lbar = num(j, "lambda_bar");
  const double flat = num(results(l), "patch_slope_bound");
  return {theta < 1.0 && lbar < gamma && flat <= 1e-10,
          "theta " + fmt("%.4f", theta) + " < 1, lambda_bar " + fmt("%.4f", lbar) + " < gamma " + fmt("%.4f", gamma) +
              ", linear patch slope " + fmt("%.2g", flat)};
}

Outcome c7(Suite& s) {
  const Run& r = manifold_run(s);
  const Run& l = linear_manifold_run(s);
  if (r.code == 1) return errored(r);
  if (l.code == 1) return errored(l);
  const json& j = results(r);
  const double rate = num(j, "contraction_rate"), lbar = num(j, "lambda_bar");
  const double err = num(results(l), "linear_rate_error");
  return {rate <= lbar && lbar < 1.0 && err <= 1e-9,
          "rate " + fmt("%.6f", rate) + " <= lambda_bar " + fmt("%.4f", lbar) + ", linear |rate - ||A|E^s||| " +
              fmt("%.2g", err)};
}

Outcome c8(Suite& s) {
  json cfg = json::object();
  cfg["ergodicity"] = {{"starts", 100}, {"n", 100000}, {"observables", 8}};
  const Run& e = s.run("c8-ergodicity", "ergodicity", cfg);
  if (e.code == 1) return errored(e);
  json scfg = json::object();
  scfg["scan"] = {{"starts", 100}, {"n", 100000}, {"observables", 8}, {"fractions", {0.0, 0.25, 0.5, 0.75, 1.0}}};
  const Run& sc = s.run("c8-scan", "scan", scfg);
  if (sc.code == 1) return errored(sc);
  const json& j = results(e);
  int passing = 0;
  for (const auto& row : results(sc)["rows"]) passing += row["pass"].get<bool>() ? 1 : 0;
  const double secs = e.seconds + sc.seconds;
  return {e.code == 0 && sc.code == 0 && secs < 600.0,
          "dispersion " + fmt("%.2e", num(j, "dispersion")) + " <= " + fmt("%.2e", num(j, "envelope")) + ", scan " +
              std::to_string(passing) + "/5 strengths up to t_max " + fmt("%.4f", num(results(sc), "t_max")) + ", " +
              fmt("%.0f s", secs) + " (limit 600 s)"};
}

const Run& srb_run(Suite& s) {
  json cfg = json::object();
  cfg["map"] = {{"conservative", false}};
  cfg["srb"] = {{"n", 1000}, {"samples", 10000}, {"bootstrap", 20}, {"cloud_points", 1000}, {"cloud_n", 10000}};
  return s.run("c9-srb", "srb", cfg);
}

Outcome c9(Suite& s) {
  const Run& r = srb_run(s);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  return {flag(j, "uniqueness_pass"),
          "distance " + fmt("%.4f", num(j, "distance")) + " vs baseline + 3 sd " + fmt("%.4f", num(j, "threshold"))};
}

Outcome c10(Suite& s) {
  const Run& h = s.run("c10-holonomy", "holonomy", json::object());
  if (h.code == 1) return errored(h);
  const Run& hl = s.run("c10-holonomy-linear", "holonomy", kLinear);
  if (hl.code == 1) return errored(hl);
  json dcfg = json::object();
  dcfg["distortion"] = {{"pairs", 100}, {"n", 40}};
  const Run& d = s.run("c10-distortion", "distortion", dcfg);
  if (d.code == 1) return errored(d);
  const json& j = results(h);
  const double err = num(results(hl), "linear_error");
  return {h.code == 0 && d.code == 0 && err <= 1e-8,
          "K " + fmt("%.4f", num(j, "max_ratio")) + ", drift " + fmt("%.2e", num(j, "drift")) + " < 0.2, slope " +
              fmt("%.2e", num(results(d), "max_abs_slope")) + " <= 0.01, linear determinant error " +
              fmt("%.2g", err)};
}

Outcome c11(Suite& s) {
  const Run& r = srb_run(s);
  if (r.code == 1) return errored(r);
  const json& j = results(r);
  const double f = num(j, "cloud_negative_cs_fraction");
  return {flag(j, "cloud_pass") && f >= 0.95, "negative cs fraction " + fmt("%.4f", f) + " >= 0.95"};
}

// Each stochastic command twice, at one thread and at the suite thread count.
Outcome c12(Suite& s) {
  struct Case {
    std::string command;
    json config;
  };
  auto section = [](const std::string& c, json body) {
    json j = json::object();
    j[c] = std::move(body);
    return j;
  };
  const std::vector<Case> cases = {
      {"map-verify", section("map-verify", {{"samples", 300}, {"boundary_samples", 100}})},
      {"lyapunov", section("lyapunov", {{"n", 5000}})},
      {"occupation", section("occupation", {{"starts", 50}, {"n", 2000}, {"tail_samples", 100}})},
      {"birkhoff", section("birkhoff", {{"starts", 20}, {"n", 2000}})},
      {"manifold", section("manifold", {{"samples", 5}, {"n", 20}, {"transform_steps", 3}})},
      {"density", section("density", {{"length", 1.0}, {"trials", 20}, {"gap_trials", 20}})},
      {"flatness", section("flatness", {{"n", {3, 5}}})},
      {"srb", section("srb", {{"n", 20}, {"samples", 200}, {"bootstrap", 4}, {"cloud_points", 20}, {"cloud_n", 200}})},
      {"ergodicity", section("ergodicity", {{"starts", 10}, {"n", 2000}})},
      {"holonomy", section("holonomy", {{"spacing", 0.002}, {"radii", {0.006}}, {"subdisks", 4}})},
      {"distortion", section("distortion", {{"pairs", 4}, {"n", 10}, {"holder_n", 5}})},
      {"scan", section("scan", {{"t_max", 0.1}, {"starts", 4}, {"n", 1000}, {"condition_samples", 200},
                                {"condition_boundary_samples", 50}})},
  };
  int identical = 0;
  std::string bad;
  for (const auto& c : cases) {
    const Run& a = s.run("c12-" + c.command + "-a", c.command, c.config, 7, 1);
    const Run& b = s.run("c12-" + c.command + "-b", c.command, c.config, 7, std::max(2, s.threads()));
    const bool same = a.code != 1 && b.code != 1 &&
                      slurp(a.dir / "summary.json") == slurp(b.dir / "summary.json");
    if (same)
      ++identical;
    else
      bad += " " + c.command;
  }
  return {identical == static_cast<int>(cases.size()),
          std::to_string(identical) + "/" + std::to_string(cases.size()) + " commands byte-identical on rerun" +
              (bad.empty() ? "" : " (differs:" + bad + ")")};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome(Suite&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "linear spectrum oracle", c1},
      {2, "map conditions certificate", c2},
      {3, "domination and cone contraction", c3},
      {4, "occupation outside the deformation", c4},
      {5, "non-uniform hyperbolicity", c5},
      {6, "graph transform", c6},
      {7, "stable manifold contraction", c7},
      {8, "ergodicity and its persistence", c8},
      {9, "uniqueness of the physical measure", c9},
      {10, "holonomy and distortion", c10},
      {11, "push-forward cloud is cs-contracting", c11},
      {12, "determinism", c12},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the deformed Anosov lab"};
  std::vector<int> only, expect_fail;
  int threads = 0;
  std::string out = "acceptance-out";
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)");
  app.add_option("--out", out, "directory for command outputs");
  CLI11_PARSE(app, argc, argv);

  Suite suite(out, threads > 0 ? threads : dalab::default_threads());
  const std::set<int> selected(only.begin(), only.end());
  std::set<int> expected;
  for (int id : expect_fail)
    if (selected.empty() || selected.count(id)) expected.insert(id);
  std::set<int> failed;
  for (const auto& c : criteria()) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(suite);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) failed.insert(c.id);
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << o.detail;
    if (!o.pass && expected.count(c.id)) std::cout << " [expected]";
    std::cout << "  [" << fmt("%.1f s", secs) << "]" << std::endl;
  }
  if (failed != expected) {
    std::cout << "unexpected outcome: failing {";
    for (int id : failed) std::cout << " " << id;
    std::cout << " }, expected {";
    for (int id : expected) std::cout << " " << id;
    std::cout << " }" << std::endl;
    return 1;
  }
  return 0;
}
