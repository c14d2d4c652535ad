#ifndef BRW_EVALUABLE_FUNCTION_HPP
#define BRW_EVALUABLE_FUNCTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brw/extended_real.hpp"

namespace brw {

/// Uniform abscissae lo, lo+step, ..., hi (hi snapped to the lattice).
struct Grid {
  double lo = 0.0;
  double hi = 1.0;
  double step = 1e-3;

  std::size_t size() const {
    return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  }
  double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
  std::vector<double> points() const {
    std::vector<double> xs(size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = at(i);
    return xs;
  }
};

/// Interval where a function may be finite. Endpoints may be +-inf.
struct Domain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Behaviour of a grid-only function outside its abscissae.
enum class Extrapolation {
  kInfinite,  // +inf outside the tabulated window
  kLinear,    // continue the end segments (window-relative convention)
};

/// An extended-real function of one variable held two ways at once: an
/// optional evaluation rule (exact, e.g. a closed form or a per-point
/// optimisation) and a tabulation on strictly increasing abscissae. Without a
/// rule, evaluation interpolates the tabulation linearly.
class EvaluableFunction {
 public:
  using Rule = std::function<ExtReal(double)>;

  EvaluableFunction() = default;

  static EvaluableFunction from_rule(Rule rule, Domain domain,
                                     std::string analytic_tag = {}) {
    EvaluableFunction f;
    f.rule_ = std::move(rule);
    f.domain_ = domain;
    f.analytic_ = std::move(analytic_tag);
    return f;
  }

  static EvaluableFunction tabulate(Rule rule, const Grid& grid, Domain domain,
                                    bool convex, std::string analytic_tag = {}) {
    EvaluableFunction f = from_rule(std::move(rule), domain, std::move(analytic_tag));
    f.xs_ = grid.points();
    f.ys_.reserve(f.xs_.size());
    for (double x : f.xs_) f.ys_.push_back(f.rule_(x));
    f.convex_ = convex;
    return f;
  }

  static EvaluableFunction from_grid(std::vector<double> xs, std::vector<ExtReal> ys,
                                     bool convex,
                                     Extrapolation extrapolation = Extrapolation::kInfinite) {
    if (xs.size() != ys.size())
      throw DomainError("abscissae and values differ in length");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1]))
        throw DomainError("abscissae must be strictly increasing");
    EvaluableFunction f;
    f.xs_ = std::move(xs);
    f.ys_ = std::move(ys);
    f.convex_ = convex;
    f.extrapolation_ = extrapolation;
    if (!f.xs_.empty()) f.domain_ = {f.xs_.front(), f.xs_.back()};
    if (extrapolation == Extrapolation::kLinear)
      f.domain_ = Domain{};
    return f;
  }

  ExtReal operator()(double x) const {
    if (rule_) return rule_(x);
    return interpolate(x);
  }

  /// Same tabulation, with an evaluation rule attached for off-grid calls.
  EvaluableFunction with_rule(Rule rule, Domain domain) && {
    rule_ = std::move(rule);
    domain_ = domain;
    return std::move(*this);
  }

  bool has_rule() const { return static_cast<bool>(rule_); }
  bool has_grid() const { return !xs_.empty(); }
  bool is_convex() const { return convex_; }
  const std::string& analytic_tag() const { return analytic_; }
  const Domain& domain() const { return domain_; }
  std::span<const double> abscissae() const { return xs_; }
  std::span<const ExtReal> values() const { return ys_; }
  Extrapolation extrapolation() const { return extrapolation_; }
  const Rule& rule() const { return rule_; }

  /// Discrete convexity of the tabulation: every finite interior value lies
  /// on or below the chord of its neighbours (plus tol), and the finite
  /// values form one contiguous run.
  bool satisfies_discrete_convexity(double tol) const {
    std::size_t first = ys_.size(), last = 0;
    for (std::size_t i = 0; i < ys_.size(); ++i) {
      if (ys_[i].is_finite()) {
        first = std::min(first, i);
        last = i;
      }
    }
    if (first >= ys_.size()) return true;
    for (std::size_t i = first; i <= last; ++i)
      if (ys_[i].is_infinite()) return false;
    for (std::size_t i = first + 1; i + 1 <= last; ++i) {
      const double x0 = xs_[i - 1], x1 = xs_[i], x2 = xs_[i + 1];
      const double y0 = ys_[i - 1].value(), y1 = ys_[i].value(), y2 = ys_[i + 1].value();
      const double chord = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0);
      if (y1 > chord + tol) return false;
    }
    return true;
  }

  /// CSV with columns a,value; +inf is written as the literal "inf".
  void write_csv(std::ostream& os, const char* value_column = "value") const {
    os << "a," << value_column << '\n';
    char buf[64];
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", xs_[i]);
      os << buf << ',';
      if (ys_[i].is_infinite()) {
        os << "inf\n";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", ys_[i].value());
        os << buf << '\n';
      }
    }
  }

 private:
  ExtReal interpolate(double x) const {
    if (xs_.empty()) throw DomainError("function has neither rule nor grid");
    const std::size_t n = xs_.size();
    if (x < xs_.front() || x > xs_.back()) {
      if (extrapolation_ == Extrapolation::kInfinite || n < 2) return ExtReal::infinity();
      const bool left = x < xs_.front();
      const std::size_t i0 = left ? 0 : n - 2;
      return linear(i0, x);
    }
    auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    if (i < n && xs_[i] == x) return ys_[i];
    return linear(i - 1, x);
  }

  ExtReal linear(std::size_t i0, double x) const {
    const ExtReal& y0 = ys_[i0];
    const ExtReal& y1 = ys_[i0 + 1];
    if (y0.is_infinite() || y1.is_infinite()) return ExtReal::infinity();
    const double t = (x - xs_[i0]) / (xs_[i0 + 1] - xs_[i0]);
    return y0.value() + t * (y1.value() - y0.value());
  }

  Rule rule_;
  Domain domain_;
  std::vector<double> xs_;
  std::vector<ExtReal> ys_;
  bool convex_ = false;
  std::string analytic_;
  Extrapolation extrapolation_ = Extrapolation::kInfinite;
};

}  // namespace brw

#endif  // BRW_EVALUABLE_FUNCTION_HPP
