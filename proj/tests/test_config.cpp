#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "brw/config.hpp"
#include "brw/runner.hpp"

using namespace brw;

namespace {

const char* kMinimalSpeed = R"({
  "scenario": "speed", "seed": 3,
  "offspring": "geometric", "mean": 2.718281828459045,
  "displacement": {"kind": "gaussian", "variance": 1}
})";

const char* kLambda3 = R"({
  "scenario": "anomalous", "seed": 9,
  "skeleton": {"V": 0.3333333333333333, "lambda": 3, "seed_prob": 0.5},
  "expect": {"gamma_dagger": 1.6329931618554521}
})";

std::vector<SchemaIssue> issues_of(const std::string& text, const std::string& hint = {}) {
  try {
    parse_config(text, hint);
  } catch (const SchemaError& e) {
    return e.issues();
  }
  return {};
}

bool has_path(const std::vector<SchemaIssue>& v, const std::string& path) {
  for (const auto& i : v)
    if (i.path == path) return true;
  return false;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("brw_config_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(ParseConfig, MinimalSpeedScenario) {
  const auto c = parse_config(kMinimalSpeed);
  EXPECT_EQ(c.scenario, "speed");
  ASSERT_TRUE(c.law.has_value());
  EXPECT_EQ(c.law->displacement.kind, "gaussian");
  EXPECT_EQ(c.seed, 3u);
}

TEST(ParseConfig, NegativeVarianceIsReportedByPath) {
  const auto v = issues_of(R"({"scenario":"speed","seed":1,"offspring":"geometric","mean":2.7,
                               "displacement":{"kind":"gaussian","variance":-1}})");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "displacement.variance");
}

TEST(ParseConfig, AllErrorsCollected) {
  const auto v = issues_of(R"({"scenario":"simulate","offspring":"geometric","mean":0.5,
                               "displacement":{"kind":"gaussian","variance":0,"colour":1},
                               "budget":10,"replicates":0,"window":-3,"typo":true})");
  for (const char* p : {"seed", "mean", "displacement.variance", "displacement.colour", "budget",
                        "replicates", "window", "typo"})
    EXPECT_TRUE(has_path(v, p)) << p;
}

TEST(ParseConfig, SeedIsMandatory) {
  EXPECT_TRUE(has_path(issues_of(R"({"scenario":"verify"})"), "seed"));
}

TEST(ParseConfig, ScenarioFromCommandMustAgree) {
  EXPECT_EQ(parse_config(R"({"seed":1})", "verify").scenario, "verify");
  EXPECT_TRUE(has_path(issues_of(kMinimalSpeed, "front"), "scenario"));
}

TEST(ParseConfig, ExpectationsMustSuitScenario) {
  EXPECT_TRUE(has_path(issues_of(R"({"scenario":"verify","seed":1,"expect":{"gamma":1}})"), "expect.gamma"));
}

TEST(ParseConfig, TwoTypeKeysAreExclusive) {
  const auto v = issues_of(R"({"scenario":"anomalous","seed":1,
      "skeleton":{"V":1,"lambda":1},
      "nu":{"offspring":"geometric","mean":3,"displacement":{"kind":"gaussian"}}})");
  EXPECT_TRUE(has_path(v, "skeleton"));
  EXPECT_TRUE(has_path(v, "eta"));
}

TEST(ParseConfig, RoundTrip) {
  for (const char* text : {kMinimalSpeed, kLambda3}) {
    const auto c = parse_config(text);
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
  auto c = parse_config(R"({"scenario":"simulate","seed":18446744073709551615,"engine":"hybrid","window":"inf",
      "nu":{"offspring":"poisson_positive","mean":2,"displacement":{"kind":"two_point","left":-1,"right":2,"left_prob":0.3}},
      "eta":{"offspring":"deterministic","mean":2,"displacement":{"kind":"point","position":0.5},"mechanism":"common"},
      "seeding":{"seed_prob":0.25,"displacement":{"kind":"gaussian","variance":0.5}},
      "count_a":[0,0.5],"snapshots":[1,2]})");
  EXPECT_TRUE(std::isinf(*c.window));
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(ParseConfig, BuildsModelObjects) {
  const auto c = parse_config(kLambda3);
  const auto sys = to_system(c);
  EXPECT_NEAR(sys.nu.cumulant(1.0).value(), 3.0 + 1.0 / 6.0, 1e-12);
  const auto o = to_sim_options(parse_config(R"({"scenario":"simulate","seed":1,"engine":"hybrid",
      "offspring":"geometric","mean":2,"displacement":{"kind":"gaussian"}})"));
  EXPECT_TRUE(std::isinf(o.window));
}

TEST(Run, SpeedScenarioWritesReport) {
  auto c = parse_config(kMinimalSpeed);
  c.output = scratch("speed").string();
  c.expect["gamma"] = std::sqrt(2.0);
  const auto out = run(c);
  EXPECT_EQ(out.exit_code(), 0);
  const std::string rep = slurp(std::filesystem::path(c.output) / "speed_report.csv");
  EXPECT_NE(rep.find("1.4142135623730949"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output) / "summary.txt"));
  c.expect["gamma"] = 1.5;
  EXPECT_EQ(run(c).exit_code(), 1);
}

TEST(Run, AnomalousFigureCrossesAtTarget) {
  auto c = parse_config(kLambda3);
  c.output = scratch("anomalous").string();
  EXPECT_EQ(run(c).exit_code(), 0);
  std::ifstream in(std::filesystem::path(c.output) / "figure71.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a,kswept_nu,kdual_eta,cv");
  double prev_a = NAN, prev_cv = NAN, crossing = NAN;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string a, k1, k2, cv;
    std::getline(ss, a, ',');
    std::getline(ss, k1, ',');
    std::getline(ss, k2, ',');
    std::getline(ss, cv, ',');
    const double av = std::stod(a);
    const double cvv = cv == "inf" ? INFINITY : std::stod(cv);
    if (prev_cv < 0 && cvv >= 0) {
      crossing = std::isfinite(cvv) ? prev_a + (av - prev_a) * (-prev_cv) / (cvv - prev_cv) : prev_a;
      break;
    }
    prev_a = av;
    prev_cv = cvv;
  }
  EXPECT_NEAR(crossing, 4.0 / std::sqrt(6.0), 1e-4);
}

TEST(Run, NoSeedingEmitsNoTerminalRows) {
  auto c = parse_config(R"({"scenario":"simulate","seed":4,"n_max":20,"budget":5000,"replicates":2,
      "skeleton":{"V":0.3333333333333333,"lambda":3,"seed_prob":0}})");
  c.output = scratch("noseed").string();
  run(c);
  const std::string traj = slurp(std::filesystem::path(c.output) / "trajectory.csv");
  EXPECT_EQ(traj.find(",eta,"), std::string::npos);
  EXPECT_NE(traj.find(",nu,"), std::string::npos);
}

TEST(Run, IdenticalConfigGivesIdenticalBytes) {
  auto c = parse_config(R"({"scenario":"simulate","seed":12,"n_max":25,"budget":3000,"replicates":3,"threads":2,
      "count_a":[0,1],"offspring":"geometric","mean":2.718281828459045,"displacement":{"kind":"gaussian"}})");
  c.output = scratch("bytes_a").string();
  run(c);
  auto d = c;
  d.output = scratch("bytes_b").string();
  d.threads = 1;
  run(d);
  for (const char* f : {"trajectory.csv", "counts.csv", "slopes.csv", "summary.txt"})
    EXPECT_EQ(slurp(std::filesystem::path(c.output) / f), slurp(std::filesystem::path(d.output) / f)) << f;
}

TEST(Run, FrontSnapshotsAreWritten) {
  auto c = parse_config(R"({"scenario":"front","seed":1,"n_max":100,"h":0.02,"snapshots":[10,100],
      "offspring":"deterministic","mean":2,"displacement":{"kind":"gaussian"}})");
  c.output = scratch("front").string();
  run(c);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output) / "profile_10.csv"));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output) / "profile_100.csv"));
  const std::string f = slurp(std::filesystem::path(c.output) / "front.csv");
  EXPECT_EQ(f.substr(0, f.find('\n')), "n,x_n,drift,profile_sup_diff");
}

TEST(Run, ModuleErrorsNameTheScenario) {
  auto c = parse_config(R"({"scenario":"simulate","seed":1,"budget":1000,"n_max":3,
      "offspring":"deterministic","mean":5000,"displacement":{"kind":"gaussian"}})");
  c.output = scratch("err").string();
  try {
    run(c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("scenario 'simulate'"), std::string::npos);
  }
}
