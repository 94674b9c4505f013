#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dalab_cli/cli.hpp"

using namespace dalab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dalab_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Settings lyapunov_settings(const fs::path& out) {
  Settings s;
  s.command = "lyapunov";
  s.seed = 5;
  s.out = out;
  s.config = json::parse(R"({"map": {"strength": 0.0}, "lyapunov": {"n": 2000, "tolerance": 0.01}})");
  return s;
}

}  // namespace

TEST(Cli, LinearLyapunovPasses) {
  const fs::path out = scratch("ok");
  std::ostringstream err;
  EXPECT_EQ(execute(lyapunov_settings(out), err), 0) << err.str();
  for (const char* f : {"summary.json", "manifest.json", "map.txt", "run.log", "lyapunov.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["command"], "lyapunov");
  EXPECT_EQ(summary["pass"], true);
  EXPECT_EQ(summary["seed"], 5);
  EXPECT_EQ(summary["params"]["n"], 2000);
  const json manifest = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["map_hash"], summary["map_hash"]);
  EXPECT_TRUE(manifest["versions"].contains("eigen"));
  fs::remove_all(out);
}

TEST(Cli, ThresholdFailureExitsTwo) {
  const fs::path out = scratch("fail");
  Settings s;
  s.command = "map-verify";
  s.seed = 5;
  s.out = out;
  // sigma below the linear contraction 1/mu cannot hold
  s.config = json::parse(R"({"map-verify": {"samples": 50, "sigma": 0.3}})");
  std::ostringstream err;
  EXPECT_EQ(execute(s, err), 2) << err.str();
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["pass"], false);
  fs::remove_all(out);
}

TEST(Cli, DistortionWithFewPairsSkipsTheFit) {
  const fs::path out = scratch("few_pairs");
  Settings s;
  s.command = "distortion";
  s.seed = 7;
  s.out = out;
  s.config = json::parse(R"({"distortion": {"pairs": 4, "n": 10, "holder_n": 5}})");
  std::ostringstream err;
  EXPECT_NE(execute(s, err), 1) << err.str();
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_TRUE(summary["results"]["angle_holder"].is_null());
  EXPECT_EQ(summary["results"]["pairs"], 4);
  fs::remove_all(out);
}

TEST(Cli, ConfigErrorsNameTheField) {
  const fs::path out = scratch("err");
  struct Case {
    std::string patch;
    std::string field;
  };
  const Case cases[] = {
      {R"({"lyapunov": {"no_such_field": 1}})", "lyapunov.no_such_field"},
      {R"({"lyapunov": {"n": -4}})", "lyapunov.n"},
      {R"({"map": {"n": 10}})", "map.n"},
      {R"({"map": {"bogus": 1}})", "map.bogus"},
      {R"({"nonsense": 1})", "nonsense"},
  };
  for (const auto& c : cases) {
    Settings s = lyapunov_settings(out);
    s.config.merge_patch(json::parse(c.patch));
    std::ostringstream err;
    EXPECT_EQ(execute(s, err), 1) << c.patch;
    EXPECT_NE(err.str().find("config error: " + c.field), std::string::npos) << err.str();
  }
  Settings s = lyapunov_settings(out);
  s.seed.reset();
  std::ostringstream err;
  EXPECT_EQ(execute(s, err), 1);
  EXPECT_NE(err.str().find("seed"), std::string::npos);
  fs::remove_all(out);
}

TEST(Cli, RerunsAreByteIdentical) {
  const fs::path a = scratch("a"), b = scratch("b");
  std::ostringstream err;
  Settings sa = lyapunov_settings(a), sb = lyapunov_settings(b);
  sb.threads = 3;
  ASSERT_EQ(execute(sa, err), 0);
  ASSERT_EQ(execute(sb, err), 0);
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(slurp(a / "lyapunov.csv"), slurp(b / "lyapunov.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, EveryCommandHasAClaim) {
  for (const auto& c : commands()) {
    EXPECT_FALSE(c.claim.empty()) << c.name;
    EXPECT_EQ(find_command(c.name), &c);
  }
  EXPECT_EQ(find_command("nope"), nullptr);
  EXPECT_EQ(commands().size(), 12u);
}

TEST(Cli, ParamsTrackUnusedKeys) {
  Params p("demo", json::parse(R"({"a": 2, "b": [1, 2], "c": "x"})"));
  EXPECT_EQ(p.integer("a", 1, 0, 10), 2);
  EXPECT_EQ(p.reals("b", {}, 0, 10), (std::vector<double>{1, 2}));
  EXPECT_DOUBLE_EQ(p.real("d", 0.5, 0, 1), 0.5);
  EXPECT_THROW(p.finish(), ConfigError);
  EXPECT_EQ(p.text("c", "y", {"x", "y"}), "x");
  EXPECT_NO_THROW(p.finish());
  EXPECT_EQ(p.resolved()["d"], 0.5);
}
