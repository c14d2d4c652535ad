#ifndef BRW_CONVEX_ANALYSIS_HPP
#define BRW_CONVEX_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brw/evaluable_function.hpp"

namespace brw {

/// Tolerances shared by the duality routines.
inline constexpr double kSpeedTolAnalytic = 1e-6;
inline constexpr double kSpeedTolGrid = 1e-4;
inline constexpr double kDualTol = 1e-9;
inline constexpr double kRootTol = 1e-8;
inline constexpr double kConvexityTol = 1e-9;

/// Speed of spread alongside the optimiser that produced it.
struct SpeedResult {
  double gamma = 0.0;
  std::optional<double> vartheta;    // root of vartheta*gamma - kappa(vartheta) = 0
  std::optional<double> theta_star;  // argmin of kappa(theta)/theta
  std::optional<double> gamma_dual;  // sup{a : kappa*(a) < 0}, when evaluated

  struct Diagnostics {
    std::string gamma_source;      // which formula fixed gamma
    std::string vartheta_source;   // "interior minimiser", "domain boundary", or empty
    double root_residual = 0.0;    // |vartheta*gamma - kappa(vartheta)|
    double route_gap = 0.0;        // |gamma_dual - gamma| once both exist
  } diagnostics;
};

namespace detail {

inline constexpr double kInvPhi = 0.6180339887498949;

/// Golden-section maximisation of a unimodal objective on [lo, hi]. The
/// objective returns -inf where it is undefined.
template <class F>
std::pair<double, double> golden_max(F&& objective, double lo, double hi, double width) {
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c), fd = objective(d);
  int guard = 0;
  while (b - a > width && guard++ < 400) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  double best_x = fc >= fd ? c : d;
  double best = std::max(fc, fd);
  for (double x : {lo, hi}) {
    const double v = objective(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return {best_x, best};
}

inline double finite_or_neg_inf(const ExtReal& v) {
  return v.is_finite() ? v.value() : -std::numeric_limits<double>::infinity();
}

/// Largest theta in [finite_at, infinite_at] where f is still finite.
inline double finite_boundary(const EvaluableFunction& f, double finite_at, double infinite_at) {
  for (int i = 0; i < 200 && infinite_at - finite_at > 1e-13 * std::max(1.0, infinite_at); ++i) {
    const double mid = 0.5 * (finite_at + infinite_at);
    (f(mid).is_finite() ? finite_at : infinite_at) = mid;
  }
  return finite_at;
}

/// Some theta > 0 where f is finite, or nullopt.
inline std::optional<double> finite_probe(const EvaluableFunction& f) {
  const Domain& dom = f.domain();
  for (int k = 0; k <= 60; ++k) {
    const double t = std::ldexp(1.0, -k);
    for (double cand : {t, 1.0 / t}) {
      if (cand <= 0.0 || !dom.contains(cand)) continue;
      if (f(cand).is_finite()) return cand;
    }
  }
  if (dom.hi > 0.0 && std::isfinite(dom.hi) && f(dom.hi).is_finite()) return dom.hi;
  return std::nullopt;
}

}  // namespace detail

struct ConjugatePoint {
  ExtReal value;
  double argmax = 0.0;
};

/// sup over theta >= 0 of theta*a - f(theta), for f convex on its domain.
/// The bracket starts at the left end of the domain and doubles until the
/// concave objective turns down or f becomes infinite; a golden-section
/// search then pins the maximiser to width 1e-10.
inline ConjugatePoint conjugate_at(const EvaluableFunction& f, double a) {
  constexpr double kThetaCap = 1e8;
  constexpr double kPlateau = 1e-9;
  const double t0 = std::max(0.0, f.domain().lo);
  auto objective = [&](double t) { return t * a - detail::finite_or_neg_inf(f(t)); };

  double start = t0;
  if (f(start).is_infinite()) {
    auto probe = detail::finite_probe(f);
    if (!probe) throw DomainError("f is +inf on all of (0, inf)");
    start = *probe;
  }
  double prev = start;
  double prev_obj = objective(prev);
  double step = 1.0;
  double upper = start;
  for (;;) {
    const double t = start + step;
    const ExtReal ft = f(t);
    if (ft.is_infinite()) {
      upper = detail::finite_boundary(f, prev, t);
      break;
    }
    const double obj = t * a - ft.value();
    if (std::isnan(obj)) throw ToleranceError("objective is NaN while bracketing");
    if (obj < prev_obj) {
      upper = t;
      break;
    }
    if (t >= kThetaCap) {
      if (obj - prev_obj > kPlateau) return {ExtReal::infinity(), t};
      upper = t;
      break;
    }
    prev = t;
    prev_obj = obj;
    step *= 2.0;
  }
  const auto [x, v] = detail::golden_max(objective, start, upper, 1e-10);
  if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
    throw ToleranceError("inner maximisation failed to bracket at a=" + std::to_string(a));
  return {ExtReal(v), x};
}

/// Fenchel dual tabulated on a_grid; the returned rule re-optimises exactly
/// at any a, so off-grid evaluation keeps full accuracy.
inline EvaluableFunction fenchel_dual(const EvaluableFunction& f, const Grid& a_grid) {
  if (!detail::finite_probe(f)) throw DomainError("f is +inf on all of (0, inf)");
  auto rule = [f](double a) { return conjugate_at(f, a).value; };
  return EvaluableFunction::tabulate(std::move(rule), a_grid, Domain{}, /*convex=*/true,
                                     f.analytic_tag().empty() ? "" : "dual(" + f.analytic_tag() + ")");
}

/// Replaces positive values by +inf; zero is kept. The result evaluates the
/// input pointwise, so a crossing between grid nodes stays resolved.
inline EvaluableFunction sweep(const EvaluableFunction& f) {
  auto swept = [](const ExtReal& v) {
    if (v.is_infinite() || v.value() > 0.0) return ExtReal::infinity();
    return v;
  };
  auto rule = [f, swept](double a) { return swept(f(a)); };
  if (!f.has_grid()) return EvaluableFunction::from_rule(std::move(rule), f.domain());
  // Where the input turns positive between two nodes, the last nonpositive
  // point is located on the rule and kept as a node; otherwise a hull built
  // on the swept grid would stop up to one step short.
  auto nonpositive = [&f](double a) {
    const ExtReal v = f(a);
    return v.is_finite() && v.value() <= 0.0;
  };
  const auto fx = f.abscissae();
  const auto fy = f.values();
  std::vector<double> xs;
  std::vector<ExtReal> ys;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    if (i > 0 && f.has_rule()) {
      const bool was = fy[i - 1].is_finite() && fy[i - 1].value() <= 0.0;
      const bool now = fy[i].is_finite() && fy[i].value() <= 0.0;
      if (was != now) {
        double in = was ? fx[i - 1] : fx[i], out = was ? fx[i] : fx[i - 1];
        for (int it = 0; it < 100 && std::abs(out - in) > 1e-15 * std::max(1.0, std::abs(in)); ++it) {
          const double mid = 0.5 * (in + out);
          (nonpositive(mid) ? in : out) = mid;
        }
        const double gap = 1e-12 * std::max(1.0, std::abs(in));
        if (in - fx[i - 1] > gap && fx[i] - in > gap) {
          xs.push_back(in);
          ys.push_back(swept(f(in)));
        }
      }
    }
    xs.push_back(fx[i]);
    ys.push_back(swept(fy[i]));
  }
  auto grid = EvaluableFunction::from_grid(std::move(xs), std::move(ys), f.is_convex());
  return std::move(grid).with_rule(std::move(rule), f.domain());
}

namespace detail {
// Lower convex hull of points sorted by x (Andrew's monotone chain, lower half).
inline std::vector<std::pair<double, double>> lower_hull(
    const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& q = hull.back();
      const double cross = (q.first - o.first) * (p.second - o.second) -
                           (q.second - o.second) * (p.first - o.first);
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  return hull;
}
}  // namespace detail

/// Greatest convex function below both f and g on their common working
/// window: the lower convex hull of the finite points of min(f, g). Outside
/// the window the end segments are extrapolated when min(f, g) is finite up
/// to that edge, and the result is +inf otherwise.
inline EvaluableFunction convex_minorant(const EvaluableFunction& f, const EvaluableFunction& g) {
  std::vector<double> xs(f.abscissae().begin(), f.abscissae().end());
  xs.insert(xs.end(), g.abscissae().begin(), g.abscissae().end());
  if (xs.empty()) throw DomainError("convex_minorant needs tabulated inputs");
  std::sort(xs.begin(), xs.end());
  std::vector<double> merged;
  for (double x : xs)
    if (merged.empty() || x - merged.back() > 1e-12 * std::max(1.0, std::abs(x)))
      merged.push_back(x);

  std::vector<std::pair<double, double>> pts;
  std::vector<ExtReal> mins(merged.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    mins[i] = min(f(merged[i]), g(merged[i]));
    if (mins[i].is_finite()) pts.emplace_back(merged[i], mins[i].value());
  }
  if (pts.empty()) throw DomainError("min(f, g) is +inf on the whole window");
  const auto hull = detail::lower_hull(pts);

  std::vector<ExtReal> ys(merged.size(), ExtReal::infinity());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const double x = merged[i];
    if (x < hull.front().first || x > hull.back().first) continue;
    if (hull.size() == 1) {
      ys[i] = hull.front().second;
      continue;
    }
    while (seg + 2 < hull.size() && x > hull[seg + 1].first) ++seg;
    const auto& p = hull[seg];
    const auto& q = hull[seg + 1];
    const double t = (x - p.first) / (q.first - p.first);
    ys[i] = std::min(p.second + t * (q.second - p.second), mins[i].to_double());
  }
  const bool open_left = mins.front().is_finite();
  const bool open_right = mins.back().is_finite();
  auto grid = EvaluableFunction::from_grid(std::move(merged), std::move(ys), /*convex=*/true,
                                           Extrapolation::kInfinite);
  if (!open_left && !open_right) return grid;
  // Window-relative extrapolation of whichever ends are open.
  const double x_lo = grid.abscissae().front(), x_hi = grid.abscissae().back();
  auto rule = [grid, open_left, open_right, x_lo, x_hi](double x) -> ExtReal {
    if (x >= x_lo && x <= x_hi) return grid(x);
    const auto xs = grid.abscissae();
    const auto ys = grid.values();
    const std::size_t n = xs.size();
    if (n < 2) return ExtReal::infinity();
    if (x < x_lo) {
      if (!open_left || ys[1].is_infinite()) return ExtReal::infinity();
      const double slope = (ys[1].value() - ys[0].value()) / (xs[1] - xs[0]);
      return ys[0].value() + slope * (x - xs[0]);
    }
    if (!open_right || ys[n - 2].is_infinite()) return ExtReal::infinity();
    const double slope = (ys[n - 1].value() - ys[n - 2].value()) / (xs[n - 1] - xs[n - 2]);
    return ys[n - 1].value() + slope * (x - xs[n - 1]);
  };
  return std::move(grid).with_rule(std::move(rule), Domain{});
}

/// sup{a : fd(a) < 0} for a convex fd that is nondecreasing past its
/// minimiser. When the minimum is exactly zero (a walk that never branches)
/// the crossing is read as sup{a : fd(a) <= 0}.
inline double speed_from_dual(const EvaluableFunction& fd) {
  constexpr double kZero = 1e-12;
  const auto xs = fd.abscissae();
  const auto ys = fd.values();
  if (xs.empty()) throw DomainError("speed_from_dual needs a tabulated function");
  std::size_t imin = xs.size();
  for (std::size_t i = 0; i < ys.size(); ++i)
    if (ys[i].is_finite() && (imin == xs.size() || ys[i].value() < ys[imin].value())) imin = i;
  if (imin == xs.size() || ys[imin].value() > kZero)
    throw DomainError("dual is nonnegative on the whole window");
  const bool critical = ys[imin].value() >= -kZero;
  auto below = [&](const ExtReal& v) {
    return v.is_finite() && (critical ? v.value() <= kZero : v.value() < 0.0);
  };
  std::size_t j = imin;
  while (j < xs.size() && below(ys[j])) ++j;
  if (j == xs.size()) throw DomainError("zero crossing lies beyond the working window");
  double lo = xs[j - 1], hi = xs[j];
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (below(fd(mid)) ? lo : hi) = mid;
  }
  return lo;
}

/// inf over theta > 0 of k(theta)/theta. A coarse geometric scan locates the
/// minimiser, golden-section refines it; the infimum may instead be a limit
/// at theta -> 0 or theta -> inf, in which case vartheta is absent.
inline SpeedResult speed_from_inf(const EvaluableFunction& k) {
  if (!detail::finite_probe(k)) throw DomainError("kappa is +inf on all of (0, inf)");
  auto ratio = [&](double t) -> double {
    const ExtReal v = k(t);
    return v.is_finite() ? v.value() / t : std::numeric_limits<double>::infinity();
  };
  constexpr int kLo = -20, kHi = 40;
  std::vector<double> ts, hs;
  for (int j = kLo; j <= kHi; ++j) {
    const double t = std::ldexp(1.0, j);
    ts.push_back(t);
    hs.push_back(ratio(t));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (hs[i] < hs[best]) best = i;
  if (!std::isfinite(hs[best])) {
    // Only a thin domain near zero may be finite; fall back to its boundary.
    auto probe = detail::finite_probe(k);
    ts = {*probe};
    hs = {ratio(*probe)};
    best = 0;
  }

  SpeedResult out;
  auto finish_interior = [&](double lo, double hi, const char* source) {
    auto neg = [&](double t) { return -ratio(t); };
    const auto [t, v] = detail::golden_max(neg, lo, hi, 1e-13 * hi);
    out.gamma = -v;
    out.theta_star = t;
    out.vartheta = t;
    out.diagnostics.gamma_source = "inf kappa(theta)/theta";
    out.diagnostics.vartheta_source = source;
    out.diagnostics.root_residual = std::abs(t * out.gamma - k(t).value());
  };

  const bool last = best + 1 == hs.size();
  const bool next_infinite = !last && !std::isfinite(hs[best + 1]);
  if (next_infinite) {
    // Domain ends between ts[best] and ts[best+1]; the minimum may sit on it.
    const double edge = detail::finite_boundary(k, ts[best], ts[best + 1]);
    const double lo = best > 0 ? ts[best - 1] : ts[best] / 2.0;
    finish_interior(lo, edge, "interior minimiser");
    if (edge - *out.theta_star <= 1e-9 * edge) out.diagnostics.vartheta_source = "domain boundary";
    return out;
  }
  if (last) {
    const double t = ts.back();
    out.gamma = (k(2.0 * t).value() - k(t).value()) / t;
    out.diagnostics.gamma_source = "limit theta->inf of kappa(theta)/theta";
    return out;
  }
  if (best == 0) {
    const double t = ts.front();
    out.gamma = 2.0 * ratio(t) - ratio(2.0 * t);
    out.diagnostics.gamma_source = "limit theta->0 of kappa(theta)/theta";
    return out;
  }
  finish_interior(ts[best - 1], ts[best + 1], "interior minimiser");
  return out;
}

/// a-window for tabulating kappa*: starts one unit left of the mean
/// displacement kappa'(0+) and ends one unit past an upper bound on the speed.
inline Grid auto_dual_grid(const EvaluableFunction& k, double step = 1e-3) {
  double slope0 = 0.0;
  const ExtReal k0 = k(0.0);
  const double eps = 1e-6;
  if (k0.is_finite() && k(eps).is_finite()) slope0 = (k(eps).value() - k0.value()) / eps;
  double upper = std::numeric_limits<double>::infinity();
  for (int j = -4; j <= 8; ++j) {
    const double t = std::ldexp(1.0, j);
    const ExtReal v = k(t);
    if (v.is_finite()) upper = std::min(upper, v.value() / t);
  }
  if (!std::isfinite(upper)) throw DomainError("kappa is +inf on the probe set");
  const double lo = std::floor((std::min(slope0, upper) - 1.0) / step) * step;
  const double hi = std::ceil((upper + 1.0) / step) * step;
  return Grid{lo, hi, step};
}

}  // namespace brw

#endif  // BRW_CONVEX_ANALYSIS_HPP
