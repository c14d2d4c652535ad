#ifndef BRW_SPEEDS_HPP
#define BRW_SPEEDS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "brw/convex_analysis.hpp"
#include "brw/models.hpp"

namespace brw {

inline constexpr double kCrossTol = 1e-4;

/// Speed of a one-type law with both formulas reconciled, plus the swept
/// rate function governing actual particle counts.
struct OneTypeSpeed {
  SpeedResult speed;
  EvaluableFunction dual;           // kappa*
  EvaluableFunction rate_function;  // sweep(kappa*)
};

inline OneTypeSpeed one_type_speed(const ReproductionLaw& law, double step = 1e-3) {
  const EvaluableFunction kappa = law.cumulant_function();
  OneTypeSpeed out;
  out.speed = speed_from_inf(kappa);
  out.dual = fenchel_dual(kappa, auto_dual_grid(kappa, step));
  out.speed.gamma_dual = speed_from_dual(out.dual);
  out.speed.diagnostics.route_gap = std::abs(*out.speed.gamma_dual - out.speed.gamma);
  if (out.speed.diagnostics.route_gap > kSpeedTolAnalytic)
    throw ToleranceError("dual and inf formulas disagree by " +
                         std::to_string(out.speed.diagnostics.route_gap));
  out.rate_function = sweep(out.dual);
  return out;
}

/// Both routes to the anomalous speed and the functions behind them.
struct AnomalousReport {
  double gamma_nu = 0.0;
  double gamma_eta = 0.0;
  double gamma_dagger = 0.0;
  double route_minorant = 0.0;  // zero crossing of r
  double route_formula = 0.0;   // constrained min-max of the ratio functions
  EvaluableFunction dual_nu;    // kappa*_nu
  EvaluableFunction dual_eta;   // kappa*_eta
  EvaluableFunction r;          // sweep(cv(sweep(kappa*_nu), kappa*_eta))
  EvaluableFunction cv_expect;  // cv(sweep(kappa*_nu), kappa*_eta), unswept
  bool anomalous = false;
};

namespace detail {

inline void require_two_type_hypotheses(const TwoTypeSystem& sys) {
  if (!sys.offdiagonal_condition())
    throw HypothesisError("seeding transform must be finite for all theta >= 0");
  // Need phi_nu <= phi_eta with both transforms finite.
  double finite_nu = std::numeric_limits<double>::infinity();
  double last_eta = -1.0;
  for (int j = -30; j <= 30; ++j) {
    const double t = std::ldexp(1.0, j);
    if (sys.nu.cumulant(t).is_finite()) finite_nu = std::min(finite_nu, t);
    if (sys.eta.cumulant(t).is_finite()) last_eta = std::max(last_eta, t);
  }
  if (!(finite_nu <= last_eta))
    throw HypothesisError("no admissible pair phi_eta >= phi_nu > 0 with finite transforms");
}

inline double ratio(const ReproductionLaw& law, double t) {
  const ExtReal v = law.cumulant(t);
  return v.is_finite() ? v.value() / t : std::numeric_limits<double>::infinity();
}

template <class F>
double golden_min(F&& f, double lo, double hi, double* argmin = nullptr) {
  auto neg = [&](double x) { return -f(x); };
  const auto [x, v] = golden_max(neg, lo, hi, 1e-12 * std::max(1.0, hi));
  if (argmin) *argmin = x;
  return -v;
}

/// Bracket [lo, hi] around the minimiser of a unimodal f on (0, inf),
/// located by a geometric scan.
template <class F>
std::pair<double, double> geometric_bracket(F&& f, int j_lo = -20, int j_hi = 30) {
  double best_v = std::numeric_limits<double>::infinity();
  int best_j = j_lo;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double v = f(std::ldexp(1.0, j));
    if (v < best_v) {
      best_v = v;
      best_j = j;
    }
  }
  return {std::ldexp(1.0, std::max(best_j - 1, j_lo - 1)), std::ldexp(1.0, best_j + 1)};
}

}  // namespace detail

/// inf over 0 < phi <= theta of max{kappa_nu(phi)/phi, kappa_eta(theta)/theta}.
/// Outer golden search over theta on a geometric bracket; the inner golden
/// search minimises the (unimodal) nu ratio on (0, theta]. If the outer
/// optimum lands on its bracket edge, a dense scan at step 1e-3 takes over.
inline double two_class_formula(const ReproductionLaw& nu, const ReproductionLaw& eta,
                                double* theta_out = nullptr) {
  auto inner = [&](double theta) {
    auto r = [&](double phi) { return detail::ratio(nu, phi); };
    return std::min(detail::golden_min(r, std::ldexp(theta, -40), theta), r(theta));
  };
  auto outer = [&](double theta) { return std::max(inner(theta), detail::ratio(eta, theta)); };
  const auto [lo, hi] = detail::geometric_bracket(outer, -20, 30);
  double arg = 0.0;
  double best = detail::golden_min(outer, lo, hi, &arg);
  const bool on_edge = arg - lo < 1e-9 * hi || hi - arg < 1e-9 * hi;
  if (on_edge) {
    double scan_arg = arg;
    for (double t = 1e-3; t <= std::min(hi, 64.0); t += 1e-3) {
      const double v = outer(t);
      if (v < best) {
        best = v;
        scan_arg = t;
      }
    }
    if (scan_arg != arg) {
      double refined = scan_arg;
      const double v = detail::golden_min(outer, std::max(1e-6, scan_arg - 1e-3),
                                          scan_arg + 1e-3, &refined);
      if (v < best) scan_arg = refined;
      best = std::min(best, v);
      arg = scan_arg;
    }
  }
  if (theta_out) *theta_out = arg;
  return best;
}

namespace detail {

inline double slope(const ReproductionLaw& law, double t) {
  const double h = 1e-6 * std::max(1.0, t);
  return (law.cumulant(t + h).value() - law.cumulant(t - h).value()) / (2.0 * h);
}

/// Window covering both auto grids, the speed estimate, and the slopes of
/// the common tangent at the optimal theta.
inline Grid joint_grid(const ReproductionLaw& nu, const ReproductionLaw& eta, double upper,
                       double step, double theta = 0.0) {
  const Grid gn = auto_dual_grid(nu.cumulant_function(), step);
  const Grid ge = auto_dual_grid(eta.cumulant_function(), step);
  const double lo = std::min(gn.lo, ge.lo);
  double reach = upper;
  if (theta > 0.0 && std::isfinite(theta))
    reach = std::max({reach, slope(nu, theta), slope(eta, theta)});
  const double hi = std::max({gn.hi, ge.hi, std::ceil((reach + 1.0) / step) * step});
  return Grid{lo, hi, step};
}

/// sup{a : f(a) < 0} for the piecewise-linear minorants built here.
inline double crossing(const EvaluableFunction& f) { return speed_from_dual(f); }

}  // namespace detail

/// With check set, a route disagreement beyond kCrossTol throws; without
/// it the report carries both values for the caller to judge.
inline AnomalousReport anomalous_speed(const TwoTypeSystem& sys, double step = 1e-3,
                                       bool check = true) {
  detail::require_two_type_hypotheses(sys);
  AnomalousReport rep;
  const auto kn = sys.nu.cumulant_function();
  const auto ke = sys.eta.cumulant_function();
  rep.gamma_nu = speed_from_inf(kn).gamma;
  rep.gamma_eta = speed_from_inf(ke).gamma;
  double theta = 0.0;
  rep.route_formula = two_class_formula(sys.nu, sys.eta, &theta);

  const Grid grid = detail::joint_grid(sys.nu, sys.eta, rep.route_formula, step, theta);
  rep.dual_nu = fenchel_dual(kn, grid);
  rep.dual_eta = fenchel_dual(ke, grid);
  rep.cv_expect = convex_minorant(sweep(rep.dual_nu), rep.dual_eta);
  rep.r = sweep(rep.cv_expect);
  rep.route_minorant = detail::crossing(rep.r);
  rep.gamma_dagger = rep.route_formula;
  if (check && std::abs(rep.route_minorant - rep.route_formula) > kCrossTol)
    throw ToleranceError("minorant and formula routes disagree: " +
                         std::to_string(rep.route_minorant) + " vs " +
                         std::to_string(rep.route_formula));
  rep.anomalous = rep.gamma_dagger > std::max(rep.gamma_nu, rep.gamma_eta) + kSpeedTolAnalytic;
  return rep;
}

/// Speed of the terminal class when the class order is exchanged.
inline double reversed_speed(const TwoTypeSystem& sys, double step = 1e-3) {
  detail::require_two_type_hypotheses(sys.reversed());
  const auto kn = sys.nu.cumulant_function();
  const auto ke = sys.eta.cumulant_function();
  double theta = 0.0;
  const double upper = two_class_formula(sys.eta, sys.nu, &theta);
  const Grid grid = detail::joint_grid(sys.nu, sys.eta, upper, step, theta);
  const auto r = sweep(convex_minorant(sweep(fenchel_dual(ke, grid)), fenchel_dual(kn, grid)));
  return detail::crossing(r);
}

/// Zero crossing of cv(kappa*_nu, kappa*_eta): the speed at which expected
/// numbers of the terminal class start to decay.
inline double expected_numbers_speed(const TwoTypeSystem& sys, double step = 1e-3) {
  detail::require_two_type_hypotheses(sys);
  const auto kn = sys.nu.cumulant_function();
  const auto ke = sys.eta.cumulant_function();
  // The crossing equals inf_theta max(kappa_nu, kappa_eta)(theta)/theta;
  // any probe of that ratio bounds the window.
  auto joint = [&](double t) { return std::max(detail::ratio(sys.nu, t), detail::ratio(sys.eta, t)); };
  const auto [blo, bhi] = detail::geometric_bracket(joint, -20, 30);
  double theta = 0.0;
  const double upper = detail::golden_min(joint, blo, bhi, &theta);
  const Grid grid = detail::joint_grid(sys.nu, sys.eta, upper, step, theta);
  return detail::crossing(convex_minorant(fenchel_dual(kn, grid), fenchel_dual(ke, grid)));
}

/// The three curves of the anomalous-speed illustration on a in [lo, hi].
struct FigureRow {
  double a;
  ExtReal kswept_nu;
  ExtReal kdual_eta;
  ExtReal cv;
};

inline std::vector<FigureRow> anomaly_figure(const AnomalousReport& rep, double lo = -0.5,
                                             double hi = 2.0, double step = 1e-3) {
  const auto swept_nu = sweep(rep.dual_nu);
  std::vector<FigureRow> rows;
  const Grid g{lo, hi, step};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = g.at(i);
    rows.push_back({a, swept_nu(a), rep.dual_eta(a), rep.cv_expect(a)});
  }
  return rows;
}

}  // namespace brw

#endif  // BRW_SPEEDS_HPP
