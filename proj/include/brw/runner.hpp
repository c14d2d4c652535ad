#ifndef BRW_RUNNER_HPP
#define BRW_RUNNER_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "brw/acceptance.hpp"
#include "brw/config.hpp"
#include "brw/csv.hpp"
#include "brw/front.hpp"
#include "brw/mc_sim.hpp"
#include "brw/speeds.hpp"

namespace brw {

struct Check {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool passed = false;
};

struct RunOutcome {
  std::vector<Check> checks;
  std::vector<std::string> files;
  int exit_code() const {
    for (const auto& c : checks)
      if (!c.passed) return 1;
    return 0;
  }
};

namespace detail {

class Artifacts {
 public:
  explicit Artifacts(const ExperimentConfig& c) : dir_(c.output) { std::filesystem::create_directories(dir_); }

  std::ofstream open(const std::string& name, RunOutcome& out) {
    const auto path = dir_ / name;
    std::ofstream os(path);
    if (!os) throw StateError("cannot write " + path.string());
    out.files.push_back(path.string());
    return os;
  }

 private:
  std::filesystem::path dir_;
};

inline Check make_check(const std::string& name, double value, double expected, double tol, bool relative) {
  Check c{name, value, expected, tol, relative, false};
  const double err = relative ? std::abs(value / expected - 1.0) : std::abs(value - expected);
  c.passed = std::isfinite(value) && err <= tol;
  return c;
}

inline void expect_abs(RunOutcome& out, const ExperimentConfig& c, const std::string& key, double value) {
  if (auto it = c.expect.find(key); it != c.expect.end())
    out.checks.push_back(make_check(key, value, it->second, c.tolerance, false));
}

inline void expect_rel(RunOutcome& out, const ExperimentConfig& c, const std::string& key, double value) {
  if (auto it = c.expect.find(key); it != c.expect.end())
    out.checks.push_back(make_check(key, value, it->second, c.rel_tolerance, true));
}

inline void write_summary(Artifacts& art, RunOutcome& out, const ExperimentConfig& c,
                          const std::vector<std::pair<std::string, std::string>>& numbers) {
  auto os = art.open("summary.txt", out);
  os << "scenario = " << c.scenario << "\n";
  os << "seed = " << c.seed << "\n";
  for (const auto& [k, v] : numbers) os << k << " = " << v << "\n";
  for (const auto& ch : out.checks) {
    os << "check " << ch.name << ": " << (ch.passed ? "PASS" : "FAIL") << " value=" << csv::num(ch.value)
       << " expected=" << csv::num(ch.expected) << " " << (ch.relative ? "rel_tolerance=" : "tolerance=")
       << csv::num(ch.tolerance) << "\n";
  }
  os << "status = " << (out.exit_code() == 0 ? "PASS" : "FAIL") << "\n";
}

inline RunOutcome run_speed(const ExperimentConfig& c) {
  RunOutcome out;
  Artifacts art(c);
  const auto r = one_type_speed(to_law(*c.law), c.grid_step);
  {
    auto os = art.open("speed_report.csv", out);
    csv::speed_report(os, r.speed);
  }
  expect_abs(out, c, "gamma", r.speed.gamma);
  if (r.speed.vartheta) expect_abs(out, c, "vartheta", *r.speed.vartheta);
  else if (c.expect.count("vartheta"))
    out.checks.push_back(make_check("vartheta", NAN, c.expect.at("vartheta"), c.tolerance, false));
  write_summary(art, out, c,
                {{"gamma", csv::num(r.speed.gamma)},
                 {"vartheta", r.speed.vartheta ? csv::num(*r.speed.vartheta) : "none"},
                 {"theta_star", csv::num(r.speed.theta_star)},
                 {"route_gap", csv::num(r.speed.diagnostics.route_gap)}});
  return out;
}

inline RunOutcome run_anomalous(const ExperimentConfig& c) {
  RunOutcome out;
  Artifacts art(c);
  const TwoTypeSystem sys = to_system(c);
  const auto rep = anomalous_speed(sys, c.grid_step, false);
  const double rev = reversed_speed(sys, c.grid_step);
  const double expn = expected_numbers_speed(sys, c.grid_step);
  {
    auto os = art.open("anomalous_report.csv", out);
    csv::anomalous_report(os, rep, rev, expn);
  }
  {
    const double hi = std::max(2.0, std::ceil(rep.gamma_dagger + 0.5));
    const auto rows = anomaly_figure(rep, -0.5, hi, c.grid_step);
    auto os = art.open("figure71.csv", out);
    csv::figure(os, rows);
  }
  out.checks.push_back(make_check("route_agreement", rep.route_minorant, rep.route_formula, kCrossTol, false));
  expect_abs(out, c, "gamma_dagger", rep.gamma_dagger);
  expect_abs(out, c, "reversed_speed", rev);
  expect_abs(out, c, "expected_numbers_speed", expn);
  write_summary(art, out, c,
                {{"gamma_nu", csv::num(rep.gamma_nu)},
                 {"gamma_eta", csv::num(rep.gamma_eta)},
                 {"gamma_dagger", csv::num(rep.gamma_dagger)},
                 {"route_minorant", csv::num(rep.route_minorant)},
                 {"anomalous", rep.anomalous ? "yes" : "no"},
                 {"reversed_speed", csv::num(rev)},
                 {"expected_numbers_speed", csv::num(expn)}});
  return out;
}

inline RunOutcome run_simulate(const ExperimentConfig& c) {
  RunOutcome out;
  Artifacts art(c);
  const SimOptions so = to_sim_options(c);
  const auto reps = static_cast<std::size_t>(c.replicates);
  std::vector<TrajectoryStats> runs;
  std::vector<csv::SlopeRow> slopes;
  std::vector<std::pair<std::string, std::string>> numbers;
  numbers.push_back({"engine", to_string(so.engine)});
  if (c.law) {
    const ReproductionLaw law = to_law(*c.law);
    runs = simulate_one_type(law, so, reps, c.seed, c.threads);
    const auto sp = one_type_speed(law, c.grid_step);
    const auto s = speed_estimate(runs);
    slopes.push_back({"speed", "nu", s.mean, s.se, sp.speed.gamma});
    expect_rel(out, c, "speed_nu", s.mean);
    numbers.push_back({"gamma", csv::num(sp.speed.gamma)});
    numbers.push_back({"speed_nu", csv::num(s.mean)});
    if (sp.speed.vartheta) {
      const auto fit = centering_slope(runs, sp.speed.gamma, *sp.speed.vartheta);
      slopes.push_back({"centering_slope", "nu", fit.slope, fit.se, fit.predicted});
      expect_abs(out, c, "centering_slope", fit.slope);
      numbers.push_back({"vartheta", csv::num(*sp.speed.vartheta)});
      numbers.push_back({"centering_slope", csv::num(fit.slope)});
    }
  } else {
    const TwoTypeSystem sys = to_system(c);
    runs = simulate_two_type(sys, so, reps, c.seed, c.threads);
    double g_nu = NAN, g_dagger = NAN;
    try {
      const auto rep = anomalous_speed(sys, c.grid_step, false);
      g_nu = rep.gamma_nu;
      g_dagger = rep.gamma_dagger;
    } catch (const HypothesisError&) {
      g_nu = speed_from_inf(sys.nu.cumulant_function()).gamma;
    }
    const auto snu = speed_estimate(runs, 0);
    const auto seta = speed_estimate(runs, 1);
    const auto sw = switch_fraction(runs);
    slopes.push_back({"speed", "nu", snu.mean, snu.se, g_nu});
    if (seta.count > 0) {
      slopes.push_back({"speed", "eta", seta.mean, seta.se, g_dagger});
      slopes.push_back({"switch_fraction", "eta", sw.mean, sw.se, NAN});
    }
    expect_rel(out, c, "speed_nu", snu.mean);
    expect_rel(out, c, "speed_eta", seta.count > 0 ? seta.mean : NAN);
    expect_abs(out, c, "switch_fraction", sw.count > 0 ? sw.mean : NAN);
    numbers.push_back({"gamma_nu", csv::num(g_nu)});
    numbers.push_back({"gamma_dagger", csv::num(g_dagger)});
    numbers.push_back({"speed_nu", csv::num(snu.mean)});
    numbers.push_back({"speed_eta", seta.count > 0 ? csv::num(seta.mean) : "none"});
    if (sw.count > 0) numbers.push_back({"switch_fraction", csv::num(sw.mean)});
  }
  {
    auto os = art.open("trajectory.csv", out);
    csv::trajectory(os, runs);
  }
  {
    auto os = art.open("counts.csv", out);
    csv::counts(os, runs);
  }
  {
    auto os = art.open("slopes.csv", out);
    csv::slopes(os, slopes);
  }
  write_summary(art, out, c, numbers);
  return out;
}

inline RunOutcome run_front(const ExperimentConfig& c) {
  RunOutcome out;
  Artifacts art(c);
  FrontOptions fo;
  fo.h = c.h;
  const auto res = front_speed(to_law(*c.law), c.n_max, fo, c.snapshots);
  {
    auto os = art.open("front.csv", out);
    csv::front(os, res.rows);
  }
  for (const auto& [n, p] : res.snapshots) {
    auto os = art.open("profile_" + std::to_string(n) + ".csv", out);
    csv::profiles(os, std::map<int, FrontProfile>{{n, p}});
  }
  expect_rel(out, c, "front_speed", res.speed);
  write_summary(art, out, c,
                {{"front_speed", csv::num(res.speed)},
                 {"final_sup_diff", csv::num(res.rows.back().sup_diff)}});
  return out;
}

inline RunOutcome run_verify(const ExperimentConfig& c) {
  RunOutcome out;
  Artifacts art(c);
  AcceptanceOptions ao;
  ao.seed = c.seed;
  ao.threads = c.threads;
  std::vector<int> ids = c.criteria;
  if (ids.empty())
    for (int i = 1; i <= 10; ++i) ids.push_back(i);
  std::vector<std::pair<std::string, std::string>> numbers;
  auto os = art.open("acceptance.csv", out);
  csv::row(os, "criterion", "title", "passed", "seconds", "limit", "detail");
  for (int id : ids) {
    const auto r = run_criterion(id, ao);
    std::string quoted = "\"" + r.detail + "\"";
    csv::row(os, r.id, r.title, r.passed ? 1 : 0, csv::num(r.seconds), csv::num(r.limit), quoted);
    out.checks.push_back({"criterion_" + std::to_string(id), r.passed ? 1.0 : 0.0, 1.0, 0.0, false, r.passed});
    numbers.push_back({"criterion_" + std::to_string(id), format_line(r)});
  }
  os.close();
  write_summary(art, out, c, numbers);
  return out;
}

}  // namespace detail

/// Runs a validated scenario, writes its artifacts under c.output and
/// evaluates the configured checks. Module errors are rethrown with the
/// scenario named.
inline RunOutcome run(const ExperimentConfig& c) {
  try {
    if (c.scenario == "speed") return detail::run_speed(c);
    if (c.scenario == "anomalous") return detail::run_anomalous(c);
    if (c.scenario == "simulate") return detail::run_simulate(c);
    if (c.scenario == "front") return detail::run_front(c);
    if (c.scenario == "verify") return detail::run_verify(c);
  } catch (const Error& e) {
    throw StateError("scenario '" + c.scenario + "': " + e.what());
  }
  throw ParamError("unknown scenario '" + c.scenario + "'");
}

}  // namespace brw

#endif  // BRW_RUNNER_HPP
