#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "brw/models.hpp"

using namespace brw;

TEST(OffspringLaw, RejectsBadParameters) {
  EXPECT_THROW(OffspringLaw(DeterministicCount{0}), ParamError);
  EXPECT_THROW(OffspringLaw(GeometricCount{0.5}), ParamError);
  EXPECT_THROW(OffspringLaw(PositivePoissonCount{1.0}), ParamError);
  EXPECT_THROW(Displacement(GaussianStep{0.0, -1.0}), ParamError);
  EXPECT_THROW(Displacement(TwoPointStep{1.0, 0.0, 0.5}), ParamError);
}

TEST(OffspringLaw, PgfEndpointsAndMean) {
  for (const OffspringLaw& g : {OffspringLaw(DeterministicCount{3}), OffspringLaw(GeometricCount{2.5}),
                                OffspringLaw(PositivePoissonCount{2.5})}) {
    EXPECT_NEAR(g.pgf(1.0), 1.0, 1e-14) << g.name();
    EXPECT_NEAR(g.pgf(0.0), 0.0, 1e-14) << g.name();
    const double h = 1e-6;
    EXPECT_NEAR((g.pgf(1.0) - g.pgf(1.0 - h)) / h, g.mean(), 1e-4) << g.name();
  }
}

TEST(OffspringLaw, ComplementIsAccurateForTinyArguments) {
  const OffspringLaw g(GeometricCount{std::numbers::e});
  EXPECT_NEAR(g.one_minus_pgf_complement(1e-300) / 1e-300, std::numbers::e, 1e-12);
}

TEST(OffspringLaw, SampleMeans) {
  std::mt19937_64 rng(1);
  for (const OffspringLaw& g : {OffspringLaw(GeometricCount{std::numbers::e}), OffspringLaw(PositivePoissonCount{1.7})}) {
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(g.sample(rng));
      ASSERT_GE(k, 1.0);
      s += k;
      s2 += k * k;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, g.mean(), 4 * se) << g.name();
  }
}

TEST(FamilySampler, MatchesLawMoments) {
  const ReproductionLaw law = bbm_skeleton_law(0.5, 1.0);
  FamilySampler draw(law);
  std::mt19937_64 rng(2);
  double count = 0, sx = 0, sxx = 0;
  long steps = 0;
  const int families = 100000;
  for (int i = 0; i < families; ++i)
    count += static_cast<double>(draw(rng, [&](double z) {
      sx += z;
      sxx += z * z;
      ++steps;
    }));
  EXPECT_NEAR(count / families, std::numbers::e, 0.03);
  EXPECT_NEAR(sx / steps, 0.0, 0.01);
  EXPECT_NEAR(sxx / steps, 0.5, 0.01);
}

TEST(ReproductionLaw, CommonMechanismSharesTheStep) {
  const ReproductionLaw law(DeterministicCount{4}, GaussianStep{0.0, 1.0}, Mechanism::kCommon);
  std::mt19937_64 rng(3);
  const auto fam = law.sample_family(rng);
  ASSERT_EQ(fam.size(), 4u);
  for (double z : fam) EXPECT_EQ(z, fam.front());
}

TEST(ReproductionLaw, CumulantOfSkeleton) {
  const ReproductionLaw law = bbm_skeleton_law(2.0, 3.0);
  EXPECT_NEAR(law.cumulant(0.7).value(), 3.0 + 2.0 * 0.49 / 2.0, 1e-12);
  EXPECT_TRUE(law.cumulant(-0.1).is_infinite());
  EXPECT_TRUE(law.is_supercritical());
}

TEST(Displacement, TwoPointTransformAndTail) {
  const Displacement d(TwoPointStep{-1.0, 2.0, 0.25});
  EXPECT_NEAR(d.log_mgf(0.5), std::log(0.25 * std::exp(-0.5) + 0.75 * std::exp(1.0)), 1e-14);
  EXPECT_DOUBLE_EQ(d.tail(0.0), 0.75);
  EXPECT_DOUBLE_EQ(d.tail(-2.0), 1.0);
  EXPECT_DOUBLE_EQ(d.tail(2.0), 0.0);
  EXPECT_NEAR(d.mean(), 1.25, 1e-15);
}

TEST(Displacement, GaussianSumTail) {
  const Displacement d(GaussianStep{0.1, 2.0});
  // S_4 ~ N(0.4, 8).
  EXPECT_NEAR(d.sum_tail(4, 1.0), 0.5 * std::erfc((1.0 - 0.4) / std::sqrt(16.0)), 1e-12);
}

TEST(Displacement, LatticeWeightsAreNormalised) {
  const Displacement d(GaussianStep{0.3, 1.0});
  for (const auto& w : {d.cell_weights(0.1), d.trapezoid_weights(0.01)}) {
    double s = 0, m = 0;
    for (std::size_t i = 0; i < w.weights.size(); ++i) {
      s += w.weights[i];
      m += w.weights[i] * static_cast<double>(w.first_offset + static_cast<long>(i));
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_GT(m, 0.0);
  }
  const Displacement a(PointMassStep{0.25});
  const auto w = a.cell_weights(0.1);
  double m = 0;
  for (std::size_t i = 0; i < w.weights.size(); ++i)
    m += w.weights[i] * 0.1 * static_cast<double>(w.first_offset + static_cast<long>(i));
  EXPECT_NEAR(m, 0.25, 1e-12);
}

TEST(TwoTypeSystem, SkeletonAndReversal) {
  const auto sys = skeleton_of_bbm(1.0 / 3.0, 3.0, 0.5);
  EXPECT_NEAR(sys.nu.cumulant(1.0).value(), 3.0 + 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(sys.eta.cumulant(1.0).value(), 1.5, 1e-12);
  const auto r = sys.reversed();
  EXPECT_NEAR(r.nu.cumulant(1.0).value(), 1.5, 1e-12);
  EXPECT_TRUE(sys.offdiagonal_condition());
  EXPECT_THROW(skeleton_of_bbm(-1.0, 1.0, 0.5), ParamError);
  EXPECT_THROW(skeleton_of_bbm(1.0, 1.0, 1.5), ParamError);
  EXPECT_NO_THROW(skeleton_of_bbm(1.0, 1.0, 0.0));
}
