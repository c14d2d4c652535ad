#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "brw/mc_sim.hpp"

using namespace brw;

namespace {

SimOptions exact(int n) {
  SimOptions o;
  o.n_max = n;
  o.budget = std::numeric_limits<std::size_t>::max();
  o.window = kUnbounded;
  return o;
}

}  // namespace

TEST(Random, StreamSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(stream_seed(7, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(stream_seed(7, 0), stream_seed(8, 0));
}

TEST(Random, RunIndexedKeepsOrderAndRethrows) {
  const auto v = run_indexed<int>(20, 3, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
  EXPECT_THROW(run_indexed<int>(5, 2,
                                [](std::size_t i) -> int {
                                  if (i == 3) throw StateError("boom");
                                  return 0;
                                }),
               StateError);
}

TEST(Simulation, RigidBinaryWalk) {
  const ReproductionLaw law(DeterministicCount{2}, PointMassStep{1.0});
  SimOptions o = exact(10);
  o.count_a = {0.5, 1.0};
  const auto st = run_one_type(law, o, 1);
  for (int n = 0; n <= 10; ++n) EXPECT_DOUBLE_EQ(st.max_nu[static_cast<std::size_t>(n)], n);
  for (const auto& c : st.counts) {
    EXPECT_TRUE(c.exact);
    EXPECT_NEAR(c.log_count, c.n * std::log(2.0), 1e-12);
  }
}

TEST(Simulation, SameSeedSameTrajectories) {
  SimOptions o;
  o.n_max = 30;
  o.budget = 5000;
  o.count_a = {0.0, 1.0};
  const auto a = simulate_one_type(bbm_skeleton_law(), o, 4, 99, 1);
  const auto b = simulate_one_type(bbm_skeleton_law(), o, 4, 99, 2);
  EXPECT_EQ(a, b);
  const auto c = simulate_one_type(bbm_skeleton_law(), o, 4, 100, 1);
  EXPECT_NE(a.front().max_nu, c.front().max_nu);
}

TEST(Simulation, BudgetIsRespected) {
  SimOptions o;
  o.n_max = 40;
  o.budget = 2000;
  o.window = 10.0;
  const auto st = run_one_type(bbm_skeleton_law(), o, 5);
  EXPECT_GE(st.diag.budget_bound_at, 0);
  EXPECT_LT(st.diag.exact_until, 40);
  EXPECT_GT(st.diag.pruned, 0u);
  const double speed = st.max_nu.back() / 40.0;
  EXPECT_GT(speed, 1.0);
  EXPECT_LT(speed, 1.6);
}

TEST(Simulation, InvalidOptionsRejected) {
  SimOptions o;
  o.budget = 10;
  EXPECT_THROW(run_one_type(bbm_skeleton_law(), o, 1), ParamError);
  o.budget = 5000;
  o.window = -1.0;
  EXPECT_THROW(run_one_type(bbm_skeleton_law(), o, 1), ParamError);
  SimOptions big;
  big.budget = 1000;
  EXPECT_THROW(run_one_type(ReproductionLaw(DeterministicCount{5000}, GaussianStep{}), big, 1), BudgetError);
}

TEST(Simulation, NoSeedingMeansNoTerminalClass) {
  const auto sys = skeleton_of_bbm(1.0 / 3.0, 3.0, 0.0);
  SimOptions o;
  o.n_max = 20;
  o.budget = 5000;
  const auto st = run_two_type(sys, o, 3);
  for (double m : st.max_eta) EXPECT_TRUE(std::isinf(m) && m < 0);
}

TEST(Simulation, FullSeedingStartsTerminalClassAtOnce) {
  const auto sys = skeleton_of_bbm(1.0, 1.0, 1.0);
  SimOptions o = exact(5);
  const auto st = run_two_type(sys, o, 3);
  EXPECT_TRUE(std::isfinite(st.max_eta[1]));
  EXPECT_EQ(st.types, 2);
}

TEST(Simulation, ExactCountsMatchPopulation) {
  SimOptions o = exact(6);
  o.count_a = {-1e9};
  const auto st = run_one_type(ReproductionLaw(DeterministicCount{3}, GaussianStep{}), o, 11);
  for (const auto& c : st.counts) EXPECT_NEAR(c.log_count, c.n * std::log(3.0), 1e-9);
}

TEST(Simulation, HybridEngineKeepsSpeed) {
  SimOptions o;
  o.n_max = 60;
  o.engine = Engine::kHybrid;
  o.window = 40.0;
  o.budget = 200000;
  const auto runs = simulate_one_type(bbm_skeleton_law(), o, 4, 17);
  const auto s = speed_estimate(runs);
  EXPECT_GT(s.mean, 1.25);
  EXPECT_LT(s.mean, std::numbers::sqrt2);
}

TEST(Simulation, HybridTwoTypeTracksSwitch) {
  SimOptions o;
  o.n_max = 40;
  o.engine = Engine::kHybrid;
  o.window = kUnbounded;
  o.budget = 100000;
  const auto runs = simulate_two_type(skeleton_of_bbm(1.0 / 3.0, 3.0, 0.5), o, 2, 23);
  const auto sw = switch_fraction(runs);
  EXPECT_EQ(sw.count, 2u);
  EXPECT_GT(sw.mean, 0.0);
  EXPECT_LT(sw.mean, 1.0);
}

TEST(Statistics, CountProfileNeedsRecordedA) {
  SimOptions o = exact(5);
  o.count_a = {0.0};
  const auto st = run_one_type(bbm_skeleton_law(), o, 2);
  const double a0 = 0.0, a1 = 0.7;
  EXPECT_EQ(count_profile(st, std::span<const double>(&a0, 1)).size(), 5u);
  EXPECT_THROW(count_profile(st, std::span<const double>(&a1, 1)), StateError);
  TrajectoryStats empty;
  EXPECT_THROW(count_profile(empty, std::span<const double>(&a0, 1)), StateError);
}

TEST(Statistics, MeanAndStandardError) {
  const double xs[] = {1.0, 2.0, 3.0, 4.0};
  const auto m = mean_se(xs);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Statistics, CenteringSlopeOfSyntheticProfile) {
  std::vector<TrajectoryStats> runs(3);
  for (auto& st : runs)
    for (int n = 0; n <= 100; ++n) st.max_nu.push_back(1.5 * n - 0.8 * std::log(std::max(n, 1)));
  const auto fit = centering_slope(runs, 1.5, 1.0);
  EXPECT_NEAR(fit.slope, -0.8, 1e-12);
  EXPECT_DOUBLE_EQ(fit.predicted, -1.5);
  EXPECT_EQ(fit.n_lo, 25);
}
