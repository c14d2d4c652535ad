#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "brw/front.hpp"

using namespace brw;

TEST(FrontProfile, StepDatumAndExtension) {
  const auto p = FrontProfile::step(0.1, 2.0);
  EXPECT_EQ(p.values.size(), 40u);
  EXPECT_DOUBLE_EQ(p.at(-5.0), 1.0);
  EXPECT_DOUBLE_EQ(p.at(5.0), 0.0);
  EXPECT_TRUE(p.nonincreasing());
}

TEST(ApplyQ, FirstStepIsExactTail) {
  const ReproductionLaw law = bbm_skeleton_law();
  const auto u = FrontProfile::step(0.01, 10.0);
  const auto v = apply_q_fixed(u, law);
  for (std::size_t i = 0; i < v.values.size(); i += 97) {
    const double t = law.displacement().tail(v.x(i));
    EXPECT_NEAR(v.values[i], law.offspring().one_minus_pgf_complement(t), 1e-15);
  }
}

TEST(ApplyQ, ConstantsAreFixed) {
  for (const auto& law : {bbm_skeleton_law(), ReproductionLaw(PositivePoissonCount{2.0}, TwoPointStep{-0.5, 0.5, 0.5}),
                          ReproductionLaw(DeterministicCount{2}, GaussianStep{}, Mechanism::kCommon)}) {
    for (double c : {0.0, 1.0}) {
      const auto q = apply_q_fixed(FrontProfile::constant(c, 0.05, -50, 100), law);
      for (double x : q.values) EXPECT_NEAR(x, c, 1e-12);
    }
  }
}

TEST(ApplyQ, RigidStepAdvancesOneUnit) {
  const ReproductionLaw law(DeterministicCount{2}, PointMassStep{1.0});
  FrontOptions o;
  o.h = 0.05;
  o.half_width = 10.0;
  auto u = FrontProfile::step(o.h, o.half_width);
  u = apply_q(u, law, o);
  for (int k = 0; k < 5; ++k) {
    const auto v = apply_q(u, law, o);
    EXPECT_NEAR(v.position - u.position, 1.0, 1e-9);
    u = v;
  }
}

TEST(ApplyQ, FftMatchesDirectSum) {
  const ReproductionLaw law = bbm_skeleton_law();
  FrontOptions o;
  auto u = FrontProfile::step(o.h, o.half_width);
  for (int k = 0; k < 30; ++k) u = apply_q(u, law, o);
  const auto a = apply_q_fixed(u, law, false);
  const auto b = apply_q_fixed(u, law, true);
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  EXPECT_LT(d, 1e-10);
}

TEST(ApplyQ, OffLatticeAtomsRejected) {
  const ReproductionLaw law(DeterministicCount{2}, TwoPointStep{-0.5, 1.003, 0.5});
  const auto u = FrontProfile::constant(0.5, 0.01, 0, 10);
  EXPECT_THROW(apply_q_fixed(u, law), KernelError);
}

TEST(ApplyQ, OrderPreserved) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const ReproductionLaw law(GeometricCount{2.0}, GaussianStep{0.0, 0.5});
  auto a = FrontProfile::constant(0.0, 0.05, -100, 200);
  a.left_fill = 1.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = i < 100 ? 0.9 * unif(rng) : 0.3 * unif(rng);
  auto b = a;
  for (double& x : b.values) x = std::min(1.0, x + 0.1 * unif(rng));
  const auto qa = apply_q_fixed(a, law), qb = apply_q_fixed(b, law);
  for (std::size_t i = 0; i < qa.values.size(); ++i) EXPECT_LE(qa.values[i], qb.values[i] + 1e-12);
}

TEST(FrontSpeed, BinaryGaussianFront) {
  const ReproductionLaw law(DeterministicCount{2}, GaussianStep{});
  const int snaps[] = {0, 100};
  const auto res = front_speed(law, 100, FrontOptions{}, snaps);
  EXPECT_NEAR(res.speed, std::sqrt(2.0 * std::log(2.0)), 0.02);
  EXPECT_EQ(res.snapshots.size(), 2u);
  EXPECT_EQ(res.rows.size(), 101u);
  EXPECT_TRUE(res.last.nonincreasing());
  EXPECT_THROW(front_speed(law, 50), ParamError);
}

TEST(Consistency, SmallMonteCarloAgrees) {
  const ReproductionLaw law(DeterministicCount{2}, GaussianStep{});
  const double xs[] = {2.0, 3.0, 4.0};
  const auto rows = mc_consistency(law, 3, xs, 20000, 8);
  for (const auto& r : rows) EXPECT_LT(std::abs(r.z), 4.0) << "x=" << r.x;
}
