#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "brw/convex_analysis.hpp"

using namespace brw;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EvaluableFunction quadratic_kappa(double lam, double v) {
  return EvaluableFunction::from_rule(
      [=](double t) -> ExtReal { return t < 0 ? ExtReal::infinity() : ExtReal(lam + v * t * t / 2); },
      Domain{0.0, kInf});
}

}  // namespace

TEST(ExtReal, InfinityAbsorbsAddition) {
  const ExtReal a = ExtReal::infinity();
  EXPECT_TRUE((a + 1.0).is_infinite());
  EXPECT_TRUE(ExtReal(3.0) < a);
  EXPECT_EQ(ExtReal(1.0) + ExtReal(2.0), ExtReal(3.0));
  EXPECT_EQ(from_double(kInf), ExtReal::infinity());
}

TEST(Conjugate, QuadraticIsOneSided) {
  const auto k = quadratic_kappa(1.0, 1.0);
  for (double a : {-1.0, -0.2, 0.0, 0.5, 1.0, 2.5}) {
    const double expect = -1.0 + std::max(a, 0.0) * std::max(a, 0.0) / 2.0;
    EXPECT_NEAR(conjugate_at(k, a).value.value(), expect, 1e-9) << "a=" << a;
  }
  EXPECT_NEAR(conjugate_at(k, 2.0).argmax, 2.0, 1e-6);
}

TEST(Conjugate, LinearKappaIsInfinitePastSlope) {
  const auto k = EvaluableFunction::from_rule([](double t) -> ExtReal { return std::log(2.0) + 0.5 * t; },
                                              Domain{0.0, kInf});
  EXPECT_TRUE(conjugate_at(k, 0.6).value.is_infinite());
  EXPECT_NEAR(conjugate_at(k, 0.4).value.value(), -std::log(2.0), 1e-9);
}

TEST(FenchelDual, OffGridEvaluationIsExact) {
  const auto fd = fenchel_dual(quadratic_kappa(1.0, 0.5), Grid{-1.0, 3.0, 0.1});
  EXPECT_TRUE(fd.has_grid());
  EXPECT_EQ(fd.abscissae().size(), 41u);
  EXPECT_NEAR(fd(1.2345).value(), -1.0 + 1.2345 * 1.2345, 1e-9);
  EXPECT_TRUE(fd.satisfies_discrete_convexity(kConvexityTol));
}

TEST(Sweep, PositiveBecomesInfiniteAndZeroStays) {
  const auto f = EvaluableFunction::from_grid({-1.0, 0.0, 1.0, 2.0}, {-0.5, 0.0, 0.5, ExtReal::infinity()}, true);
  const auto s = sweep(f);
  EXPECT_EQ(s(-1.0), ExtReal(-0.5));
  EXPECT_EQ(s(0.0), ExtReal(0.0));
  EXPECT_TRUE(s(1.0).is_infinite());
  EXPECT_TRUE(s(2.0).is_infinite());
}

TEST(ConvexMinorant, LiesBelowBothAndIsConvex) {
  const Grid g{-2.0, 4.0, 0.01};
  const auto f = EvaluableFunction::tabulate([](double a) -> ExtReal { return a * a - 1.0; }, g, {}, true);
  const auto h = EvaluableFunction::tabulate([](double a) -> ExtReal { return (a - 2) * (a - 2) - 0.5; }, g, {}, true);
  const auto m = convex_minorant(f, h);
  EXPECT_TRUE(m.satisfies_discrete_convexity(kConvexityTol));
  for (double a : m.abscissae()) {
    EXPECT_LE(m(a).value(), f(a).value() + 1e-12);
    EXPECT_LE(m(a).value(), h(a).value() + 1e-12);
  }
  // Between the minimisers the minorant is the common tangent, strictly below both.
  EXPECT_LT(m(1.0).value(), std::min(f(1.0).value(), h(1.0).value()) - 0.1);
}

TEST(ConvexMinorant, HullOfFunctionWithInfiniteStretch) {
  const auto f = EvaluableFunction::from_grid({0.0, 1.0, 2.0, 3.0}, {1.0, ExtReal::infinity(), 1.0, 4.0}, true);
  const auto g = EvaluableFunction::from_grid({0.0, 1.0, 2.0, 3.0}, {4.0, 3.0, ExtReal::infinity(), 5.0}, true);
  const auto m = convex_minorant(f, g);
  EXPECT_NEAR(m(1.0).value(), 1.0, 1e-12);
  EXPECT_NEAR(m(3.0).value(), 4.0, 1e-12);
}

TEST(Speeds, DualAndInfAgreeOnQuadratic) {
  const auto k = quadratic_kappa(1.0, 1.0);
  const auto r = speed_from_inf(k);
  EXPECT_NEAR(r.gamma, std::numbers::sqrt2, 1e-9);
  ASSERT_TRUE(r.vartheta.has_value());
  EXPECT_NEAR(*r.vartheta, std::numbers::sqrt2, 1e-6);
  EXPECT_LT(r.diagnostics.root_residual, kRootTol);
  EXPECT_NEAR(speed_from_dual(fenchel_dual(k, auto_dual_grid(k))), std::numbers::sqrt2, 1e-9);
}

TEST(Speeds, LinearKappaHasNoVartheta) {
  const auto k = EvaluableFunction::from_rule([](double t) -> ExtReal { return std::log(2.0) + 0.5 * t; },
                                              Domain{0.0, kInf});
  const auto r = speed_from_inf(k);
  EXPECT_NEAR(r.gamma, 0.5, 1e-9);
  EXPECT_FALSE(r.vartheta.has_value());
  EXPECT_NEAR(speed_from_dual(fenchel_dual(k, auto_dual_grid(k))), 0.5, 1e-9);
}

TEST(Speeds, NonBranchingWalkHasZeroSpeed) {
  const auto k = quadratic_kappa(0.0, 1.0);
  EXPECT_NEAR(speed_from_inf(k).gamma, 0.0, 1e-5);
  EXPECT_NEAR(speed_from_dual(fenchel_dual(k, auto_dual_grid(k))), 0.0, 1e-5);
}

TEST(Speeds, NonnegativeDualThrows) {
  const auto f = EvaluableFunction::from_grid({0.0, 1.0}, {0.5, 1.0}, true);
  EXPECT_THROW(speed_from_dual(f), DomainError);
}

TEST(Speeds, CrossingBeyondWindowThrows) {
  const auto f = EvaluableFunction::from_grid({0.0, 1.0}, {-1.0, -0.5}, true);
  EXPECT_THROW(speed_from_dual(f), DomainError);
}

TEST(EvaluableFunction, GridMustIncrease) {
  EXPECT_THROW(EvaluableFunction::from_grid({0.0, 0.0}, {1.0, 2.0}, false), DomainError);
  EXPECT_THROW(EvaluableFunction::from_grid({0.0}, {1.0, 2.0}, false), DomainError);
}
