#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "brw/speeds.hpp"

using namespace brw;

namespace {
const double kTarget = 4.0 / std::sqrt(6.0);
}

TEST(OneTypeSpeed, SkeletonLaw) {
  const auto r = one_type_speed(bbm_skeleton_law());
  EXPECT_NEAR(r.speed.gamma, std::numbers::sqrt2, 1e-9);
  EXPECT_NEAR(*r.speed.vartheta, std::numbers::sqrt2, 1e-6);
  EXPECT_LE(r.speed.diagnostics.route_gap, kSpeedTolAnalytic);
  EXPECT_TRUE(r.rate_function(2.0).is_infinite());
  EXPECT_NEAR(r.rate_function(1.0).value(), -0.5, 1e-9);
}

TEST(OneTypeSpeed, DeterministicBinaryGaussian) {
  const ReproductionLaw law(DeterministicCount{2}, GaussianStep{0.0, 1.0});
  EXPECT_NEAR(one_type_speed(law).speed.gamma, std::sqrt(2.0 * std::log(2.0)), 1e-9);
}

TEST(OneTypeSpeed, PointMassStepMovesRigidly) {
  const ReproductionLaw law(GeometricCount{2.0}, PointMassStep{0.75});
  const auto r = one_type_speed(law);
  EXPECT_NEAR(r.speed.gamma, 0.75, 1e-6);
  EXPECT_FALSE(r.speed.vartheta.has_value());
}

TEST(AnomalousSpeed, WorkedExample) {
  const auto rep = anomalous_speed(skeleton_of_bbm(1.0 / 3.0, 3.0, 0.5));
  EXPECT_NEAR(rep.route_formula, kTarget, 1e-6);
  EXPECT_NEAR(rep.route_minorant, kTarget, 1e-4);
  EXPECT_NEAR(rep.gamma_nu, std::numbers::sqrt2, 1e-9);
  EXPECT_NEAR(rep.gamma_eta, std::numbers::sqrt2, 1e-9);
  EXPECT_TRUE(rep.anomalous);
}

TEST(AnomalousSpeed, ClosedFormAcrossRates) {
  for (double lam : {1.5, 2.0, 5.0}) {
    const auto rep = anomalous_speed(skeleton_of_bbm(1.0 / lam, lam, 0.5));
    EXPECT_NEAR(rep.gamma_dagger, (1.0 + lam) / std::sqrt(2.0 * lam), 1e-6) << lam;
  }
}

TEST(AnomalousSpeed, EqualClassesAreNotAnomalous) {
  const auto rep = anomalous_speed(skeleton_of_bbm(1.0, 1.0, 0.5));
  EXPECT_NEAR(rep.gamma_dagger, std::numbers::sqrt2, 1e-6);
  EXPECT_FALSE(rep.anomalous);
}

TEST(AnomalousSpeed, ReversedAndExpectedNumbers) {
  const auto sys = skeleton_of_bbm(1.0 / 3.0, 3.0, 0.5);
  EXPECT_NEAR(reversed_speed(sys), std::numbers::sqrt2, 1e-4);
  EXPECT_NEAR(expected_numbers_speed(sys.reversed()), kTarget, 1e-4);
}

TEST(AnomalousSpeed, FigureCurvesCrossAtTarget) {
  const auto rep = anomalous_speed(skeleton_of_bbm(1.0 / 3.0, 3.0, 0.5));
  const auto rows = anomaly_figure(rep);
  double crossing = NAN;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool was_neg = rows[i - 1].cv.is_finite() && rows[i - 1].cv.value() < 0;
    const bool now_pos = rows[i].cv.is_infinite() || rows[i].cv.value() >= 0;
    if (was_neg && now_pos) {
      crossing = rows[i - 1].a;
      break;
    }
  }
  EXPECT_NEAR(crossing, kTarget, 1e-3);
  for (const auto& r : rows) {
    if (r.cv.is_finite() && r.kdual_eta.is_finite()) {
      EXPECT_LE(r.cv.value(), r.kdual_eta.value() + 1e-12);
    }
  }
}

TEST(TwoClassFormula, ReturnsOptimalTheta) {
  const auto sys = skeleton_of_bbm(1.0 / 3.0, 3.0, 0.5);
  double theta = 0.0;
  const double v = two_class_formula(sys.nu, sys.eta, &theta);
  EXPECT_NEAR(v, kTarget, 1e-6);
  EXPECT_GT(theta, 0.0);
  EXPECT_NEAR(sys.eta.cumulant(theta).value() / theta, v, 1e-6);
}
