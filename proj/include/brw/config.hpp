#ifndef BRW_CONFIG_HPP
#define BRW_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "brw/error.hpp"
#include "brw/mc_sim.hpp"
#include "brw/models.hpp"

namespace brw {

struct SchemaIssue {
  std::string path;
  std::string reason;
  bool operator==(const SchemaIssue&) const = default;
};

/// All validation failures of one document, each with its key path.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<SchemaIssue> issues)
      : Error(render(issues)), issues_(std::move(issues)) {}
  SchemaError(const std::string& path, const std::string& reason)
      : SchemaError(std::vector<SchemaIssue>{{path, reason}}) {}
  const std::vector<SchemaIssue>& issues() const { return issues_; }

 private:
  static std::string render(const std::vector<SchemaIssue>& issues) {
    std::string s = "SchemaError:";
    for (const auto& i : issues) s += " " + i.path + ": " + i.reason + ";";
    if (!issues.empty()) s.pop_back();
    return s;
  }
  std::vector<SchemaIssue> issues_;
};

struct DisplacementConfig {
  std::string kind = "gaussian";  // gaussian | point | two_point
  double mean = 0.0;
  double variance = 1.0;
  double position = 0.0;
  double left = -1.0;
  double right = 1.0;
  double left_prob = 0.5;
  bool operator==(const DisplacementConfig&) const = default;
};

struct LawConfig {
  std::string offspring = "geometric";  // deterministic | geometric | poisson_positive
  double mean = 2.0;
  DisplacementConfig displacement;
  std::string mechanism = "independent";
  bool operator==(const LawConfig&) const = default;
};

struct SeedingConfig {
  double seed_prob = 0.5;
  DisplacementConfig displacement{"point"};
  bool operator==(const SeedingConfig&) const = default;
};

struct SkeletonConfig {
  double V = 1.0;
  double lambda = 1.0;
  double seed_prob = 0.5;
  bool operator==(const SkeletonConfig&) const = default;
};

struct ExperimentConfig {
  std::string scenario;
  std::uint64_t seed = 0;

  std::optional<LawConfig> law;  // one-type scenarios
  std::optional<LawConfig> nu;   // two-type, explicit laws
  std::optional<LawConfig> eta;
  std::optional<SeedingConfig> seeding;
  std::optional<SkeletonConfig> skeleton;  // two-type, BBM skeleton shorthand
  bool reversed = false;

  int n_max = 200;
  std::uint64_t budget = 100000;
  std::optional<double> window;  // engine default when absent
  double h = 0.01;
  int replicates = 32;
  unsigned threads = 1;
  std::string engine = "pruned";
  double bin_width = 0.1;
  double dense_threshold = 1000.0;
  std::vector<double> count_a;
  int count_horizon = 0;
  std::vector<int> snapshots;
  double grid_step = 1e-3;

  std::map<std::string, double> expect;
  double tolerance = 1e-6;     // absolute, analytic quantities
  double rel_tolerance = 0.05; // relative, simulated quantities
  std::string output = "out";
  std::vector<int> criteria;   // verify: subset to run (empty: all)

  bool two_type() const { return nu.has_value() || skeleton.has_value(); }
  bool operator==(const ExperimentConfig&) const = default;
};

inline const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> k{"speed", "anomalous", "simulate", "front", "verify"};
  return k;
}

namespace detail {

using nlohmann::json;

class Reader {
 public:
  std::vector<SchemaIssue> issues;

  void fail(const std::string& path, const std::string& reason) { issues.push_back({path, reason}); }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  void closed(const json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) fail(join(prefix, k), "unknown key");
  }

  bool number(const json& obj, const std::string& key, const std::string& prefix, double& out) {
    if (!obj.contains(key)) return false;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      fail(join(prefix, key), "must be a number");
      return false;
    }
    out = v.get<double>();
    if (!std::isfinite(out)) {
      fail(join(prefix, key), "must be finite");
      return false;
    }
    return true;
  }

  template <class Int>
  bool integer(const json& obj, const std::string& key, const std::string& prefix, Int& out,
               long long min_value) {
    if (!obj.contains(key)) return false;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(join(prefix, key), "must be an integer");
      return false;
    }
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (min_value > 0 && u < static_cast<std::uint64_t>(min_value)) {
        fail(join(prefix, key), "must be >= " + std::to_string(min_value));
        return false;
      }
      out = static_cast<Int>(u);
      return true;
    }
    const auto s = v.get<long long>();
    if (s < min_value) {
      fail(join(prefix, key), "must be >= " + std::to_string(min_value));
      return false;
    }
    out = static_cast<Int>(s);
    return true;
  }

  bool string(const json& obj, const std::string& key, const std::string& prefix, std::string& out,
              const std::set<std::string>& choices) {
    if (!obj.contains(key)) return false;
    const auto& v = obj.at(key);
    if (!v.is_string()) {
      fail(join(prefix, key), "must be a string");
      return false;
    }
    out = v.get<std::string>();
    if (!choices.empty() && !choices.count(out)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : "|") + c;
      fail(join(prefix, key), "must be one of " + list);
      return false;
    }
    return true;
  }

  void positive(const json& obj, const std::string& key, const std::string& prefix, double& out) {
    double v = out;
    if (number(obj, key, prefix, v)) {
      if (v > 0.0) out = v;
      else fail(join(prefix, key), "must be positive");
    }
  }

  void probability(const json& obj, const std::string& key, const std::string& prefix, double& out) {
    double v = out;
    if (number(obj, key, prefix, v)) {
      if (v >= 0.0 && v <= 1.0) out = v;
      else fail(join(prefix, key), "must lie in [0,1]");
    }
  }

  DisplacementConfig displacement(const json& v, const std::string& path, const std::string& default_kind) {
    DisplacementConfig d;
    d.kind = default_kind;
    if (!v.is_object()) {
      fail(path, "must be an object");
      return d;
    }
    closed(v, path, {"kind", "mean", "variance", "position", "left", "right", "left_prob"});
    string(v, "kind", path, d.kind, {"gaussian", "point", "two_point"});
    if (d.kind == "gaussian") {
      number(v, "mean", path, d.mean);
      positive(v, "variance", path, d.variance);
    } else if (d.kind == "point") {
      number(v, "position", path, d.position);
    } else if (d.kind == "two_point") {
      number(v, "left", path, d.left);
      number(v, "right", path, d.right);
      probability(v, "left_prob", path, d.left_prob);
      if (!(d.left < d.right)) fail(join(path, "right"), "must exceed left");
    }
    return d;
  }

  LawConfig law(const json& obj, const std::string& prefix) {
    LawConfig l;
    if (!obj.contains("offspring")) fail(join(prefix, "offspring"), "required");
    string(obj, "offspring", prefix, l.offspring, {"deterministic", "geometric", "poisson_positive"});
    if (!obj.contains("mean")) {
      fail(join(prefix, "mean"), "required");
    } else if (number(obj, "mean", prefix, l.mean)) {
      if (l.offspring == "deterministic" && (l.mean < 1.0 || l.mean != std::floor(l.mean)))
        fail(join(prefix, "mean"), "deterministic family size must be an integer >= 1");
      if (l.offspring == "geometric" && l.mean < 1.0) fail(join(prefix, "mean"), "must be >= 1");
      if (l.offspring == "poisson_positive" && !(l.mean > 1.0)) fail(join(prefix, "mean"), "must exceed 1");
    }
    if (!obj.contains("displacement")) fail(join(prefix, "displacement"), "required");
    else l.displacement = displacement(obj.at("displacement"), join(prefix, "displacement"), "gaussian");
    string(obj, "mechanism", prefix, l.mechanism, {"independent", "common"});
    return l;
  }
};

inline nlohmann::json displacement_json(const DisplacementConfig& d) {
  nlohmann::json j{{"kind", d.kind}};
  if (d.kind == "gaussian") {
    j["mean"] = d.mean;
    j["variance"] = d.variance;
  } else if (d.kind == "point") {
    j["position"] = d.position;
  } else {
    j["left"] = d.left;
    j["right"] = d.right;
    j["left_prob"] = d.left_prob;
  }
  return j;
}

inline void law_json(nlohmann::json& j, const LawConfig& l) {
  j["offspring"] = l.offspring;
  j["mean"] = l.mean;
  j["displacement"] = displacement_json(l.displacement);
  j["mechanism"] = l.mechanism;
}

inline const std::map<std::string, std::set<std::string>>& expectation_keys() {
  static const std::map<std::string, std::set<std::string>> m{
      {"speed", {"gamma", "vartheta"}},
      {"anomalous", {"gamma_dagger", "reversed_speed", "expected_numbers_speed"}},
      {"simulate", {"speed_nu", "speed_eta", "centering_slope", "switch_fraction"}},
      {"front", {"front_speed"}},
      {"verify", {}},
  };
  return m;
}

}  // namespace detail

/// Parses and validates a JSON scenario. `scenario_hint` (the subcommand)
/// fills in a missing "scenario" and must agree with a present one. Every
/// problem found is reported at once.
inline ExperimentConfig parse_config(const std::string& text, const std::string& scenario_hint = {}) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("not valid JSON: ") + e.what());
  }
  detail::Reader rd;
  ExperimentConfig c;
  if (!doc.is_object()) throw SchemaError("", "top level must be an object");

  rd.closed(doc, "", {"scenario", "seed", "offspring", "mean", "displacement", "mechanism", "nu", "eta",
                      "seeding", "skeleton", "reversed", "n_max", "budget", "window", "h", "replicates",
                      "threads", "engine", "bin_width", "dense_threshold", "count_a", "count_horizon",
                      "snapshots", "grid_step", "expect", "tolerance", "rel_tolerance", "output",
                      "criteria"});

  const std::set<std::string> kinds(scenario_kinds().begin(), scenario_kinds().end());
  if (doc.contains("scenario")) {
    rd.string(doc, "scenario", "", c.scenario, kinds);
    if (!scenario_hint.empty() && c.scenario != scenario_hint)
      rd.fail("scenario", "file says '" + c.scenario + "' but the command is '" + scenario_hint + "'");
  } else if (!scenario_hint.empty()) {
    c.scenario = scenario_hint;
  } else {
    rd.fail("scenario", "required");
  }

  if (!doc.contains("seed")) rd.fail("seed", "required (no clock-based default)");
  else if (!doc.at("seed").is_number_unsigned() && !(doc.at("seed").is_number_integer() && doc.at("seed").get<long long>() >= 0))
    rd.fail("seed", "must be a nonnegative integer");
  else c.seed = doc.at("seed").get<std::uint64_t>();

  const bool one = doc.contains("offspring") || doc.contains("mean") || doc.contains("displacement") ||
                   doc.contains("mechanism");
  if (one) c.law = rd.law(doc, "");

  if (doc.contains("skeleton")) {
    const auto& s = doc.at("skeleton");
    if (!s.is_object()) {
      rd.fail("skeleton", "must be an object");
    } else {
      rd.closed(s, "skeleton", {"V", "lambda", "seed_prob"});
      SkeletonConfig sk;
      if (!s.contains("V")) rd.fail("skeleton.V", "required");
      if (!s.contains("lambda")) rd.fail("skeleton.lambda", "required");
      rd.positive(s, "V", "skeleton", sk.V);
      rd.positive(s, "lambda", "skeleton", sk.lambda);
      rd.probability(s, "seed_prob", "skeleton", sk.seed_prob);
      c.skeleton = sk;
    }
  }
  for (const char* key : {"nu", "eta"}) {
    if (!doc.contains(key)) continue;
    const auto& s = doc.at(key);
    if (!s.is_object()) {
      rd.fail(key, "must be an object");
      continue;
    }
    rd.closed(s, key, {"offspring", "mean", "displacement", "mechanism"});
    (std::string(key) == "nu" ? c.nu : c.eta) = rd.law(s, key);
  }
  if (doc.contains("seeding")) {
    const auto& s = doc.at("seeding");
    if (!s.is_object()) {
      rd.fail("seeding", "must be an object");
    } else {
      rd.closed(s, "seeding", {"seed_prob", "displacement"});
      SeedingConfig sd;
      rd.probability(s, "seed_prob", "seeding", sd.seed_prob);
      if (s.contains("displacement")) sd.displacement = rd.displacement(s.at("displacement"), "seeding.displacement", "point");
      c.seeding = sd;
    }
  }
  if (c.nu.has_value() != c.eta.has_value()) rd.fail(c.nu ? "eta" : "nu", "nu and eta must be given together");
  if (c.skeleton && (c.nu || c.eta || c.seeding)) rd.fail("skeleton", "exclusive with nu/eta/seeding");
  if (c.seeding && !c.nu) rd.fail("seeding", "needs nu and eta");
  if (c.law && c.two_type()) rd.fail("offspring", "one-type law keys are exclusive with a two-type system");
  if (doc.contains("reversed")) {
    if (!doc.at("reversed").is_boolean()) rd.fail("reversed", "must be a boolean");
    else c.reversed = doc.at("reversed").get<bool>();
  }

  rd.integer(doc, "n_max", "", c.n_max, 1);
  rd.integer(doc, "budget", "", c.budget, 1000);
  if (doc.contains("window")) {
    const auto& w = doc.at("window");
    if (w.is_string() && w.get<std::string>() == "inf") c.window = kUnbounded;
    else if (w.is_number() && w.get<double>() > 0.0) c.window = w.get<double>();
    else rd.fail("window", "must be a positive number or \"inf\"");
  }
  rd.positive(doc, "h", "", c.h);
  rd.integer(doc, "replicates", "", c.replicates, 1);
  rd.integer(doc, "threads", "", c.threads, 1);
  rd.string(doc, "engine", "", c.engine, {"pruned", "hybrid"});
  rd.positive(doc, "bin_width", "", c.bin_width);
  {
    double d = c.dense_threshold;
    if (rd.number(doc, "dense_threshold", "", d)) {
      if (d >= 1.0) c.dense_threshold = d;
      else rd.fail("dense_threshold", "must be >= 1");
    }
  }
  if (doc.contains("count_a")) {
    const auto& a = doc.at("count_a");
    if (!a.is_array()) rd.fail("count_a", "must be an array of numbers");
    else
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) rd.fail("count_a." + std::to_string(i), "must be a number");
        else c.count_a.push_back(a[i].get<double>());
      }
  }
  rd.integer(doc, "count_horizon", "", c.count_horizon, 0);
  if (doc.contains("snapshots")) {
    const auto& a = doc.at("snapshots");
    if (!a.is_array()) rd.fail("snapshots", "must be an array of generations");
    else
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number_integer() || a[i].get<long long>() < 0)
          rd.fail("snapshots." + std::to_string(i), "must be a nonnegative integer");
        else c.snapshots.push_back(a[i].get<int>());
      }
  }
  if (doc.contains("criteria")) {
    const auto& a = doc.at("criteria");
    if (!a.is_array()) rd.fail("criteria", "must be an array of criterion numbers");
    else
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number_integer() || a[i].get<long long>() < 1 || a[i].get<long long>() > 10)
          rd.fail("criteria." + std::to_string(i), "must be an integer in 1..10");
        else c.criteria.push_back(a[i].get<int>());
      }
  }
  rd.positive(doc, "grid_step", "", c.grid_step);
  rd.positive(doc, "tolerance", "", c.tolerance);
  rd.positive(doc, "rel_tolerance", "", c.rel_tolerance);
  rd.string(doc, "output", "", c.output, {});

  if (doc.contains("expect")) {
    const auto& e = doc.at("expect");
    if (!e.is_object()) {
      rd.fail("expect", "must be an object");
    } else {
      const auto it = detail::expectation_keys().find(c.scenario);
      for (const auto& [k, v] : e.items()) {
        if (it == detail::expectation_keys().end() || !it->second.count(k)) {
          rd.fail("expect." + k, "not a checkable quantity for scenario '" + c.scenario + "'");
        } else if (!v.is_number()) {
          rd.fail("expect." + k, "must be a number");
        } else {
          c.expect[k] = v.get<double>();
        }
      }
    }
  }

  // What each scenario needs.
  if (c.scenario == "speed" || c.scenario == "front") {
    if (!c.law) rd.fail("offspring", "a one-type law is required for '" + c.scenario + "'");
    if (c.scenario == "front" && c.n_max < 100) rd.fail("n_max", "front needs n_max >= 100");
  } else if (c.scenario == "anomalous") {
    if (!c.two_type()) rd.fail("skeleton", "a two-type system (skeleton or nu/eta) is required");
  } else if (c.scenario == "simulate") {
    if (!c.law && !c.two_type()) rd.fail("offspring", "a one-type law or a two-type system is required");
  }

  if (!rd.issues.empty()) throw SchemaError(rd.issues);
  return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  nlohmann::json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  if (c.law) detail::law_json(j, *c.law);
  if (c.skeleton) j["skeleton"] = {{"V", c.skeleton->V}, {"lambda", c.skeleton->lambda}, {"seed_prob", c.skeleton->seed_prob}};
  if (c.nu) {
    j["nu"] = nlohmann::json::object();
    detail::law_json(j["nu"], *c.nu);
  }
  if (c.eta) {
    j["eta"] = nlohmann::json::object();
    detail::law_json(j["eta"], *c.eta);
  }
  if (c.seeding)
    j["seeding"] = {{"seed_prob", c.seeding->seed_prob}, {"displacement", detail::displacement_json(c.seeding->displacement)}};
  j["reversed"] = c.reversed;
  j["n_max"] = c.n_max;
  j["budget"] = c.budget;
  if (c.window) {
    if (std::isinf(*c.window)) j["window"] = "inf";
    else j["window"] = *c.window;
  }
  j["h"] = c.h;
  j["replicates"] = c.replicates;
  j["threads"] = c.threads;
  j["engine"] = c.engine;
  j["bin_width"] = c.bin_width;
  j["dense_threshold"] = c.dense_threshold;
  j["count_a"] = c.count_a;
  j["count_horizon"] = c.count_horizon;
  j["snapshots"] = c.snapshots;
  j["grid_step"] = c.grid_step;
  if (!c.expect.empty()) j["expect"] = c.expect;
  j["tolerance"] = c.tolerance;
  j["rel_tolerance"] = c.rel_tolerance;
  j["output"] = c.output;
  if (!c.criteria.empty()) j["criteria"] = c.criteria;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// From specs to model objects.

inline Displacement to_displacement(const DisplacementConfig& d) {
  if (d.kind == "gaussian") return GaussianStep{d.mean, d.variance};
  if (d.kind == "point") return PointMassStep{d.position};
  return TwoPointStep{d.left, d.right, d.left_prob};
}

inline ReproductionLaw to_law(const LawConfig& l) {
  OffspringLaw off = l.offspring == "deterministic" ? OffspringLaw(DeterministicCount{static_cast<int>(l.mean)})
                     : l.offspring == "geometric"   ? OffspringLaw(GeometricCount{l.mean})
                                                    : OffspringLaw(PositivePoissonCount{l.mean});
  return ReproductionLaw(off, to_displacement(l.displacement),
                         l.mechanism == "common" ? Mechanism::kCommon : Mechanism::kIndependent);
}

inline TwoTypeSystem to_system(const ExperimentConfig& c) {
  TwoTypeSystem sys;
  if (c.skeleton) {
    sys = skeleton_of_bbm(c.skeleton->V, c.skeleton->lambda, c.skeleton->seed_prob);
  } else if (c.nu && c.eta) {
    sys.nu = to_law(*c.nu);
    sys.eta = to_law(*c.eta);
    if (c.seeding) sys.seeding = Seeding{c.seeding->seed_prob, to_displacement(c.seeding->displacement)};
  } else {
    throw ParamError("configuration has no two-type system");
  }
  return c.reversed ? sys.reversed() : sys;
}

inline SimOptions to_sim_options(const ExperimentConfig& c) {
  SimOptions o;
  o.n_max = c.n_max;
  o.budget = static_cast<std::size_t>(c.budget);
  o.engine = c.engine == "hybrid" ? Engine::kHybrid : Engine::kPruned;
  o.window = c.window ? *c.window : (o.engine == Engine::kHybrid ? kUnbounded : 15.0);
  o.bin_width = c.bin_width;
  o.dense_threshold = c.dense_threshold;
  o.count_a = c.count_a;
  o.count_horizon = c.count_horizon;
  return o;
}

}  // namespace brw

#endif  // BRW_CONFIG_HPP
