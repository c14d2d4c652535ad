#ifndef BRW_MODELS_HPP
#define BRW_MODELS_HPP

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "brw/error.hpp"
#include "brw/evaluable_function.hpp"

namespace brw {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Family-size laws. All put no mass on zero.

struct DeterministicCount {
  int k = 2;
};

/// Geometric on {1, 2, ...}: P(N = j) = q (1-q)^(j-1) with q = 1/mean.
struct GeometricCount {
  double mean = 2.0;
};

/// Poisson conditioned to be positive, parametrised by its conditional mean.
struct PositivePoissonCount {
  double mean = 2.0;
};

class OffspringLaw {
 public:
  using Variant = std::variant<DeterministicCount, GeometricCount, PositivePoissonCount>;

  OffspringLaw() : OffspringLaw(Variant(DeterministicCount{2})) {}
  OffspringLaw(DeterministicCount l) : OffspringLaw(Variant(l)) {}  // NOLINT
  OffspringLaw(GeometricCount l) : OffspringLaw(Variant(l)) {}      // NOLINT
  OffspringLaw(PositivePoissonCount l) : OffspringLaw(Variant(l)) {}  // NOLINT
  explicit OffspringLaw(Variant v) : law_(v) {
    if (auto* d = std::get_if<DeterministicCount>(&law_)) {
      if (d->k < 1) throw ParamError("deterministic family size must be >= 1");
    } else if (auto* g = std::get_if<GeometricCount>(&law_)) {
      if (!(g->mean >= 1.0)) throw ParamError("geometric mean must be >= 1");
    } else {
      auto& p = std::get<PositivePoissonCount>(law_);
      if (!(p.mean > 1.0)) throw ParamError("positive-Poisson mean must exceed 1");
      rate_ = solve_rate(p.mean);
    }
  }

  const Variant& variant() const { return law_; }

  double mean() const {
    return std::visit(
        [](const auto& l) -> double {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, DeterministicCount>) return l.k;
          else return l.mean;
        },
        law_);
  }

  /// Single-family certainty, i.e. the walk never branches.
  bool is_degenerate_one() const {
    if (auto* d = std::get_if<DeterministicCount>(&law_)) return d->k == 1;
    if (auto* g = std::get_if<GeometricCount>(&law_)) return g->mean == 1.0;
    return false;
  }

  /// Rate mu of the underlying Poisson (positive-Poisson only).
  double poisson_rate() const { return rate_; }

  /// 1 - g(1 - w), evaluated without cancellation for small w.
  double one_minus_pgf_complement(double w) const {
    if (auto* d = std::get_if<DeterministicCount>(&law_))
      return -std::expm1(d->k * std::log1p(-w));
    if (auto* g = std::get_if<GeometricCount>(&law_)) {
      const double q = 1.0 / g->mean;
      return w / (q + (1.0 - q) * w);
    }
    return std::expm1(-rate_ * w) / std::expm1(-rate_);
  }

  double pgf(double s) const { return 1.0 - one_minus_pgf_complement(1.0 - s); }

  template <class URBG>
  long sample(URBG& rng) const {
    if (auto* d = std::get_if<DeterministicCount>(&law_)) return d->k;
    if (auto* g = std::get_if<GeometricCount>(&law_)) {
      if (g->mean == 1.0) return 1;
      std::geometric_distribution<long> geo(1.0 / g->mean);
      return 1 + geo(rng);
    }
    // Inversion of the zero-truncated Poisson.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng) * (-std::expm1(-rate_));
    long k = 1;
    double p = std::exp(-rate_) * rate_;
    while (u > p && k < 100000) {
      u -= p;
      ++k;
      p *= rate_ / static_cast<double>(k);
    }
    return k;
  }

  std::string name() const {
    if (std::holds_alternative<DeterministicCount>(law_)) return "deterministic";
    if (std::holds_alternative<GeometricCount>(law_)) return "geometric";
    return "poisson_positive";
  }

 private:
  // mu / (1 - e^-mu) = m, solved by Newton from mu = m.
  static double solve_rate(double m) {
    double mu = m;
    for (int i = 0; i < 100; ++i) {
      const double e = -std::expm1(-mu);
      const double f = mu / e - m;
      const double df = (e - mu * std::exp(-mu)) / (e * e);
      const double next = mu - f / df;
      if (std::abs(next - mu) < 1e-15 * mu) return next;
      mu = next > 0 ? next : mu / 2;
    }
    return mu;
  }

  Variant law_;
  double rate_ = 0.0;
};

// ---------------------------------------------------------------------------
// Displacement laws.

struct GaussianStep {
  double mean = 0.0;
  double variance = 1.0;
};

struct PointMassStep {
  double position = 0.0;
};

/// left with probability left_prob, right otherwise.
struct TwoPointStep {
  double left = -1.0;
  double right = 1.0;
  double left_prob = 0.5;
};

/// One atom or density cell of a displacement law on a lattice.
struct LatticeWeights {
  long first_offset = 0;          // lattice index of weights[0]
  std::vector<double> weights;    // probabilities, summing to 1
};

class Displacement {
 public:
  using Variant = std::variant<GaussianStep, PointMassStep, TwoPointStep>;

  Displacement() : Displacement(Variant(GaussianStep{})) {}
  Displacement(GaussianStep l) : Displacement(Variant(l)) {}  // NOLINT
  Displacement(PointMassStep l) : Displacement(Variant(l)) {}  // NOLINT
  Displacement(TwoPointStep l) : Displacement(Variant(l)) {}  // NOLINT
  explicit Displacement(Variant v) : law_(v) {
    if (auto* g = std::get_if<GaussianStep>(&law_)) {
      if (!(g->variance > 0.0)) throw ParamError("Gaussian variance must be positive");
    } else if (auto* t = std::get_if<TwoPointStep>(&law_)) {
      if (!(t->left_prob >= 0.0 && t->left_prob <= 1.0))
        throw ParamError("two-point probability must lie in [0,1]");
      if (!(t->left < t->right)) throw ParamError("two-point atoms must satisfy left < right");
    }
  }

  const Variant& variant() const { return law_; }

  /// log E exp(theta X); finite for every real theta for these laws.
  double log_mgf(double theta) const {
    if (auto* g = std::get_if<GaussianStep>(&law_))
      return theta * g->mean + 0.5 * g->variance * theta * theta;
    if (auto* p = std::get_if<PointMassStep>(&law_)) return theta * p->position;
    const auto& t = std::get<TwoPointStep>(law_);
    if (t.left_prob == 0.0) return theta * t.right;
    if (t.left_prob == 1.0) return theta * t.left;
    const double a = std::log(t.left_prob) + theta * t.left;
    const double b = std::log1p(-t.left_prob) + theta * t.right;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  }

  double mean() const {
    if (auto* g = std::get_if<GaussianStep>(&law_)) return g->mean;
    if (auto* p = std::get_if<PointMassStep>(&law_)) return p->position;
    const auto& t = std::get<TwoPointStep>(law_);
    return t.left_prob * t.left + (1.0 - t.left_prob) * t.right;
  }

  /// Largest point of the support (+inf for the Gaussian).
  double support_max() const {
    if (std::holds_alternative<GaussianStep>(law_)) return std::numeric_limits<double>::infinity();
    if (auto* p = std::get_if<PointMassStep>(&law_)) return p->position;
    const auto& t = std::get<TwoPointStep>(law_);
    return t.left_prob == 1.0 ? t.left : t.right;
  }

  /// P(X > x).
  double tail(double x) const {
    if (auto* g = std::get_if<GaussianStep>(&law_))
      return 0.5 * std::erfc((x - g->mean) / std::sqrt(2.0 * g->variance));
    if (auto* p = std::get_if<PointMassStep>(&law_)) return p->position > x ? 1.0 : 0.0;
    const auto& t = std::get<TwoPointStep>(law_);
    return (t.left > x ? t.left_prob : 0.0) + (t.right > x ? 1.0 - t.left_prob : 0.0);
  }

  /// P(X_1 + ... + X_n > x) for n i.i.d. copies.
  double sum_tail(int n, double x) const {
    if (n == 0) return 0.0 > x ? 1.0 : 0.0;
    if (auto* g = std::get_if<GaussianStep>(&law_))
      return 0.5 * std::erfc((x - n * g->mean) / std::sqrt(2.0 * n * g->variance));
    if (auto* p = std::get_if<PointMassStep>(&law_)) return n * p->position > x ? 1.0 : 0.0;
    const auto& t = std::get<TwoPointStep>(law_);
    // Binomial number of left atoms.
    double total = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double pos = j * t.left + (n - j) * t.right;
      if (pos <= x) continue;
      const double logc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
      const double lp = (j > 0 ? j * std::log(t.left_prob) : 0.0) +
                        (n - j > 0 ? (n - j) * std::log1p(-t.left_prob) : 0.0);
      total += std::exp(logc + lp);
    }
    return total;
  }

  template <class URBG>
  double sample(URBG& rng) const {
    if (auto* g = std::get_if<GaussianStep>(&law_)) {
      std::normal_distribution<double> nd(g->mean, std::sqrt(g->variance));
      return nd(rng);
    }
    if (auto* p = std::get_if<PointMassStep>(&law_)) return p->position;
    const auto& t = std::get<TwoPointStep>(law_);
    std::bernoulli_distribution b(t.left_prob);
    return b(rng) ? t.left : t.right;
  }

  /// Probability of landing in each lattice cell [k*h - h/2, k*h + h/2).
  /// Atoms off the lattice are split between their two neighbours so the
  /// mean is preserved.
  LatticeWeights cell_weights(double h, double sigmas = 8.5) const {
    if (auto* g = std::get_if<GaussianStep>(&law_)) {
      const double sd = std::sqrt(g->variance);
      const long lo = static_cast<long>(std::floor((g->mean - sigmas * sd) / h));
      const long hi = static_cast<long>(std::ceil((g->mean + sigmas * sd) / h));
      LatticeWeights out{lo, {}};
      double total = 0.0;
      for (long k = lo; k <= hi; ++k) {
        const double a = (k - 0.5) * h, b = (k + 0.5) * h;
        const double w = gaussian_mass(g->mean, sd, a, b);
        out.weights.push_back(w);
        total += w;
      }
      for (double& w : out.weights) w /= total;
      return out;
    }
    return atoms_on_lattice(h);
  }

  /// Trapezoid quadrature weights f(k h) h for densities (renormalised to
  /// unit mass); atoms are handled as in cell_weights.
  LatticeWeights trapezoid_weights(double h, double sigmas = 8.5) const {
    if (auto* g = std::get_if<GaussianStep>(&law_)) {
      const double sd = std::sqrt(g->variance);
      const long lo = static_cast<long>(std::floor((g->mean - sigmas * sd) / h));
      const long hi = static_cast<long>(std::ceil((g->mean + sigmas * sd) / h));
      LatticeWeights out{lo, {}};
      double total = 0.0;
      for (long k = lo; k <= hi; ++k) {
        const double z = (k * h - g->mean) / sd;
        const double w = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi)) * h;
        out.weights.push_back(w);
        total += w;
      }
      for (double& w : out.weights) w /= total;
      return out;
    }
    return atoms_on_lattice(h);
  }

  std::string name() const {
    if (std::holds_alternative<GaussianStep>(law_)) return "gaussian";
    if (std::holds_alternative<PointMassStep>(law_)) return "point";
    return "two_point";
  }

 private:
  static double gaussian_mass(double mean, double sd, double a, double b) {
    const double za = (a - mean) / (sd * std::numbers::sqrt2);
    const double zb = (b - mean) / (sd * std::numbers::sqrt2);
    if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
    if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
    return 0.5 * (std::erf(zb) - std::erf(za));
  }

  LatticeWeights atoms_on_lattice(double h) const {
    std::vector<std::pair<double, double>> atoms;
    if (auto* p = std::get_if<PointMassStep>(&law_)) {
      atoms.emplace_back(p->position, 1.0);
    } else {
      const auto& t = std::get<TwoPointStep>(law_);
      if (t.left_prob > 0) atoms.emplace_back(t.left, t.left_prob);
      if (t.left_prob < 1) atoms.emplace_back(t.right, 1.0 - t.left_prob);
    }
    long lo = std::numeric_limits<long>::max(), hi = std::numeric_limits<long>::min();
    for (auto [x, w] : atoms) {
      lo = std::min(lo, static_cast<long>(std::floor(x / h + 1e-9)));
      hi = std::max(hi, static_cast<long>(std::floor(x / h + 1e-9)) + 1);
    }
    LatticeWeights out{lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), 0.0)};
    for (auto [x, w] : atoms) {
      const double u = x / h;
      long k = static_cast<long>(std::floor(u + 1e-9));
      double frac = u - static_cast<double>(k);
      if (std::abs(frac) < 1e-9) frac = 0.0;
      out.weights[static_cast<std::size_t>(k - lo)] += w * (1.0 - frac);
      out.weights[static_cast<std::size_t>(k + 1 - lo)] += w * frac;
    }
    while (!out.weights.empty() && out.weights.back() == 0.0) out.weights.pop_back();
    while (!out.weights.empty() && out.weights.front() == 0.0) {
      out.weights.erase(out.weights.begin());
      ++out.first_offset;
    }
    return out;
  }

  Variant law_;
};

enum class Mechanism { kIndependent, kCommon };

inline std::string to_string(Mechanism m) {
  return m == Mechanism::kIndependent ? "independent" : "common";
}

// ---------------------------------------------------------------------------

/// One-type reproduction: a family size, a displacement law, and whether the
/// daughters of a family share one displacement or draw their own.
class ReproductionLaw {
 public:
  ReproductionLaw() = default;
  ReproductionLaw(OffspringLaw offspring, Displacement displacement,
                  Mechanism mechanism = Mechanism::kIndependent)
      : offspring_(std::move(offspring)),
        displacement_(std::move(displacement)),
        mechanism_(mechanism) {}

  const OffspringLaw& offspring() const { return offspring_; }
  const Displacement& displacement() const { return displacement_; }
  Mechanism mechanism() const { return mechanism_; }

  bool is_supercritical() const { return offspring_.mean() > 1.0; }

  /// kappa(theta) = log E N + log E e^{theta X} for theta >= 0, +inf below.
  /// The intensity measure factorises under both mechanisms.
  ExtReal cumulant(double theta) const {
    if (theta < 0.0) return ExtReal::infinity();
    return from_double(std::log(offspring_.mean()) + displacement_.log_mgf(theta));
  }

  EvaluableFunction cumulant_function() const {
    ReproductionLaw self = *this;
    return EvaluableFunction::from_rule([self](double t) { return self.cumulant(t); },
                                        Domain{0.0, std::numeric_limits<double>::infinity()},
                                        "kappa[" + self.describe() + "]");
  }

  /// Calls sink(displacement) once per daughter; returns the family size.
  template <class URBG, class Sink>
  long for_each_daughter(URBG& rng, Sink&& sink) const {
    const long n = offspring_.sample(rng);
    if (mechanism_ == Mechanism::kCommon) {
      const double z = displacement_.sample(rng);
      for (long i = 0; i < n; ++i) sink(z);
    } else {
      for (long i = 0; i < n; ++i) sink(displacement_.sample(rng));
    }
    return n;
  }

  template <class URBG>
  std::vector<double> sample_family(URBG& rng) const {
    std::vector<double> out;
    for_each_daughter(rng, [&](double z) { out.push_back(z); });
    return out;
  }

  std::string describe() const {
    std::string s = offspring_.name() + "(mean=" + std::to_string(offspring_.mean()) + ")," +
                    displacement_.name() + "," + to_string(mechanism_);
    return s;
  }

 private:
  OffspringLaw offspring_;
  Displacement displacement_;
  Mechanism mechanism_ = Mechanism::kIndependent;
};

/// Fast family draws for the simulation engines: ziggurat Gaussian and
/// exponential variates, the geometric count taken as floor(E / -log(1-q)).
class FamilySampler {
 public:
  explicit FamilySampler(const ReproductionLaw& law) : law_(&law) {
    const auto& off = law.offspring().variant();
    if (auto* g = std::get_if<GeometricCount>(&off); g && g->mean > 1.0) {
      geo_rate_ = -std::log1p(-1.0 / g->mean);
      kind_ = Count::kGeometric;
    } else if (auto* d = std::get_if<DeterministicCount>(&off)) {
      fixed_ = d->k;
      kind_ = Count::kFixed;
    } else if (std::holds_alternative<GeometricCount>(off)) {
      fixed_ = 1;
      kind_ = Count::kFixed;
    }
    if (auto* gs = std::get_if<GaussianStep>(&law.displacement().variant())) {
      normal_ = boost::random::normal_distribution<double>(gs->mean, std::sqrt(gs->variance));
      gaussian_ = true;
    }
  }

  template <class URBG>
  double step(URBG& rng) {
    return gaussian_ ? normal_(rng) : law_->displacement().sample(rng);
  }

  template <class URBG, class Sink>
  long operator()(URBG& rng, Sink&& sink) {
    long n = fixed_;
    if (kind_ == Count::kGeometric) n = 1 + static_cast<long>(std::floor(exp_(rng) / geo_rate_));
    else if (kind_ == Count::kOther) n = law_->offspring().sample(rng);
    if (law_->mechanism() == Mechanism::kCommon) {
      const double z = step(rng);
      for (long i = 0; i < n; ++i) sink(z);
    } else {
      for (long i = 0; i < n; ++i) sink(step(rng));
    }
    return n;
  }

 private:
  enum class Count { kFixed, kGeometric, kOther };
  const ReproductionLaw* law_;
  Count kind_ = Count::kOther;
  long fixed_ = 1;
  double geo_rate_ = 1.0;
  boost::random::exponential_distribution<double> exp_{1.0};
  boost::random::normal_distribution<double> normal_;
  bool gaussian_ = false;
};

/// How a nu-parent seeds eta-daughters: Bernoulli(prob) count, placed at the
/// parent's position plus an independent draw from displacement.
struct Seeding {
  double prob = 0.5;
  Displacement displacement = PointMassStep{0.0};

  /// Every catalogued displacement has a finite transform for all theta >= 0.
  bool transform_finite_everywhere() const { return true; }
};

/// Reducible two-type system: nu begets nu (at least one per family) and
/// seeds eta; eta begets only eta.
struct TwoTypeSystem {
  ReproductionLaw nu;
  ReproductionLaw eta;
  Seeding seeding;

  /// Same laws with the class order exchanged (eta seeds nu instead).
  TwoTypeSystem reversed() const { return TwoTypeSystem{eta, nu, seeding}; }

  bool offdiagonal_condition() const { return seeding.transform_finite_everywhere(); }
};

/// Discrete-time skeleton of the two-type branching Brownian motion: nu
/// splits at rate lambda with variance V, eta at rate one with variance one,
/// and each nu-family seeds one eta with probability p.
inline TwoTypeSystem skeleton_of_bbm(double variance, double rate, double p) {
  if (!(variance > 0.0)) throw ParamError("V must be positive");
  if (!(rate > 0.0)) throw ParamError("lambda must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw ParamError("p must lie in [0,1]");
  TwoTypeSystem sys;
  sys.nu = ReproductionLaw(GeometricCount{std::exp(rate)}, GaussianStep{0.0, variance});
  sys.eta = ReproductionLaw(GeometricCount{std::numbers::e}, GaussianStep{0.0, 1.0});
  sys.seeding = Seeding{p, PointMassStep{0.0}};
  return sys;
}

/// One-type skeleton of binary branching Brownian motion at integer times.
inline ReproductionLaw bbm_skeleton_law(double variance = 1.0, double rate = 1.0) {
  return ReproductionLaw(GeometricCount{std::exp(rate)}, GaussianStep{0.0, variance});
}

}  // namespace brw

#endif  // BRW_MODELS_HPP
