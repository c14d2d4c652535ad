#ifndef BRW_MC_SIM_HPP
#define BRW_MC_SIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brw/error.hpp"
#include "brw/models.hpp"
#include "brw/random.hpp"

namespace brw {

// Two ways of keeping a generation finite.
//  kPruned: exact particles; once the budget B binds, keep the B highest
//           within W of the running maximum.
//  kHybrid: exact particles only where they are sparse. Lattice bins whose
//           expected occupancy reaches the dense threshold hold a mass
//           instead, propagated by convolution with Gaussian noise; lighter
//           bins are resampled as Poisson many particles. Far-behind mass is
//           kept (up to the window), so leaders descended from deep in the
//           bulk are not lost.
enum class Engine { kPruned, kHybrid };

inline std::string to_string(Engine e) { return e == Engine::kPruned ? "pruned" : "hybrid"; }

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct SimOptions {
  int n_max = 200;
  std::size_t budget = 100000;
  double window = 15.0;              // may be kUnbounded
  Engine engine = Engine::kPruned;
  double bin_width = 0.1;            // hybrid lattice
  double dense_threshold = 1000.0;   // hybrid occupancy at which a bin turns dense
  std::vector<double> count_a;       // a-values for Z[na, inf) censuses
  int count_horizon = 0;             // project counts to this generation (0: off)
  bool stop_when_inexact = false;    // end the run at the last exact generation
};

struct CountRow {
  int n = 0;
  int type = 0;
  double a = 0.0;
  double log_count = 0.0;  // -inf for an empty half-line
  bool exact = true;       // false for rows projected past the last census
  bool operator==(const CountRow&) const = default;
};

struct PruneDiagnostics {
  int exact_until = 0;       // last generation with a complete census
  int budget_bound_at = -1;  // first generation where the budget bound
  std::uint64_t pruned = 0;  // particles discarded (or aggregated) in total
  std::uint64_t born = 0;
  bool born_saturated = false;
  bool operator==(const PruneDiagnostics&) const = default;
};

struct TrajectoryStats {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  int types = 1;
  std::vector<double> max_nu;   // M_n of the first class; -inf when empty
  std::vector<double> max_eta;  // M_n of the terminal class (two-type runs)
  std::vector<int> switch_gen;  // birth generation of the rightmost eta's type switch
  std::vector<CountRow> counts;
  PruneDiagnostics diag;
  bool operator==(const TrajectoryStats&) const = default;
};

struct TypeState {
  std::vector<double> positions;
  std::vector<int> switch_gen;  // parallel to positions, terminal class only
  std::uint64_t born = 0;
  bool saturated = false;
  std::uint64_t pruned = 0;

  double max() const {
    if (positions.empty()) return -std::numeric_limits<double>::infinity();
    return *std::max_element(positions.begin(), positions.end());
  }
};

struct GenerationState {
  int n = 0;
  std::array<TypeState, 2> type;
  bool exact = true;
};

namespace detail {

inline void saturating_add(std::uint64_t& acc, std::uint64_t v, bool& saturated) {
  if (acc > std::numeric_limits<std::uint64_t>::max() - v) {
    acc = std::numeric_limits<std::uint64_t>::max();
    saturated = true;
  } else {
    acc += v;
  }
}

// Positions within this of n*a count as reaching it (lattice walks land
// exactly on n*a up to rounding).
inline double census_threshold(int n, double a) {
  const double x = n * a;
  return x - 1e-9 * std::max(1.0, std::abs(x));
}

inline double log_count_at_least(std::span<const double> pos, double threshold) {
  std::size_t c = 0;
  for (double x : pos) c += x >= threshold;
  return c == 0 ? -std::numeric_limits<double>::infinity() : std::log(static_cast<double>(c));
}

/// Keep-top-B-within-W. Returns the number of particles removed.
inline std::uint64_t prune(TypeState& t, std::size_t budget, double window) {
  const std::size_t before = t.positions.size();
  if (before == 0) return 0;
  const double cut = t.max() - window;
  if (t.switch_gen.empty()) {
    auto& p = t.positions;
    if (std::isfinite(window)) p.erase(std::remove_if(p.begin(), p.end(), [&](double x) { return x < cut; }), p.end());
    if (p.size() > budget) {
      // The B-th largest by histogram, then an exact selection inside the
      // one bin that straddles it.
      const double hi = *std::max_element(p.begin(), p.end());
      const double lo = *std::min_element(p.begin(), p.end());
      const std::size_t nb = 1 << 14;
      const double scale = (hi > lo) ? static_cast<double>(nb) / (hi - lo) : 0.0;
      auto bin = [&](double x) { return std::min(nb - 1, static_cast<std::size_t>((hi - x) * scale)); };
      std::vector<std::size_t> hist(nb, 0);
      for (double x : p) ++hist[bin(x)];
      std::size_t acc = 0, edge = 0;
      while (acc + hist[edge] < budget) acc += hist[edge++];
      std::vector<double> kept, boundary;
      kept.reserve(budget);
      for (double x : p) {
        const std::size_t b = bin(x);
        if (b < edge) kept.push_back(x);
        else if (b == edge) boundary.push_back(x);
      }
      const std::size_t need = budget - kept.size();
      std::nth_element(boundary.begin(), boundary.begin() + static_cast<long>(need), boundary.end(),
                       std::greater<>());
      kept.insert(kept.end(), boundary.begin(), boundary.begin() + static_cast<long>(need));
      p = std::move(kept);
    }
  } else {
    std::vector<std::pair<double, int>> tmp;
    tmp.reserve(before);
    for (std::size_t i = 0; i < before; ++i)
      if (!(t.positions[i] < cut)) tmp.emplace_back(t.positions[i], t.switch_gen[i]);
    if (tmp.size() > budget) {
      std::nth_element(tmp.begin(), tmp.begin() + static_cast<long>(budget), tmp.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      tmp.resize(budget);
    }
    t.positions.resize(tmp.size());
    t.switch_gen.resize(tmp.size());
    for (std::size_t i = 0; i < tmp.size(); ++i) {
      t.positions[i] = tmp[i].first;
      t.switch_gen[i] = tmp[i].second;
    }
  }
  return before - t.positions.size();
}

inline void validate(const SimOptions& o) {
  if (o.n_max < 0) throw ParamError("n_max must be nonnegative");
  if (o.budget < 1000) throw ParamError("budget must be at least 1000");
  if (!(o.window > 0.0)) throw ParamError("window must be positive");
  if (o.engine == Engine::kHybrid) {
    if (!(o.bin_width > 0.0)) throw ParamError("bin_width must be positive");
    if (!(o.dense_threshold >= 1.0)) throw ParamError("dense_threshold must be >= 1");
  }
}

inline void record_counts(TrajectoryStats& st, int n, int type, std::span<const double> pos,
                          const std::vector<double>& as) {
  if (n == 0) return;
  for (double a : as)
    st.counts.push_back({n, type, a, log_count_at_least(pos, census_threshold(n, a)), true});
}

/// log E[Z_H[Ha, inf) | generation k] for the one-type walk, from the
/// positions at generation k. Positions are grouped at width 1e-3 first.
inline double projected_log_count(const ReproductionLaw& law, std::span<const double> pos, int k,
                                  int horizon, double a) {
  if (pos.empty()) return -std::numeric_limits<double>::infinity();
  const int steps = horizon - k;
  const double target = census_threshold(horizon, a);
  const double width = 1e-3;
  const double lo = *std::min_element(pos.begin(), pos.end());
  const double hi = *std::max_element(pos.begin(), pos.end());
  const std::size_t bins = static_cast<std::size_t>((hi - lo) / width) + 1;
  std::vector<std::uint64_t> hist(bins, 0);
  for (double y : pos) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>((y - lo) / width));
    hist[b]++;
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (!hist[b]) continue;
    const double y = lo + (static_cast<double>(b) + 0.5) * width;
    sum += static_cast<double>(hist[b]) * law.displacement().sum_tail(steps, target - y);
  }
  if (!(sum > 0.0)) return -std::numeric_limits<double>::infinity();
  return steps * std::log(law.offspring().mean()) + std::log(sum);
}

// ---------------------------------------------------------------------------
// Pruned engine.

inline TrajectoryStats run_pruned(const ReproductionLaw& nu, const ReproductionLaw* eta,
                                  const Seeding* seeding, const SimOptions& o,
                                  std::uint64_t seed) {
  Rng rng(seed);
  TrajectoryStats st;
  st.seed = seed;
  st.types = eta ? 2 : 1;
  GenerationState s;
  s.type[0].positions.push_back(0.0);
  const double ninf = -std::numeric_limits<double>::infinity();
  std::array<bool, 2> pruning{false, false};
  std::vector<double> last_exact = s.type[0].positions;
  int last_exact_n = 0;

  auto record = [&](const GenerationState& g) {
    st.max_nu.push_back(g.type[0].max());
    if (eta) {
      const auto& e = g.type[1];
      if (e.positions.empty()) {
        st.max_eta.push_back(ninf);
        st.switch_gen.push_back(-1);
      } else {
        const auto it = std::max_element(e.positions.begin(), e.positions.end());
        st.max_eta.push_back(*it);
        st.switch_gen.push_back(e.switch_gen[static_cast<std::size_t>(it - e.positions.begin())]);
      }
    }
    if (g.exact) {
      record_counts(st, g.n, 0, g.type[0].positions, o.count_a);
      if (eta) record_counts(st, g.n, 1, g.type[1].positions, o.count_a);
    }
  };
  record(s);

  std::bernoulli_distribution seed_coin(seeding ? seeding->prob : 0.0);
  const bool seeds = eta && seeding && seeding->prob > 0.0;
  FamilySampler draw_nu(nu);
  std::optional<FamilySampler> draw_eta;
  if (eta) draw_eta.emplace(*eta);

  for (int n = 0; n < o.n_max; ++n) {
    GenerationState next;
    next.n = n + 1;
    auto& nn = next.type[0];
    auto& ne = next.type[1];
    nn.positions.reserve(s.type[0].positions.size() * 3);
    for (double x : s.type[0].positions) {
      // This generation would be discarded anyway.
      if (o.stop_when_inexact && n > 0 && nn.positions.size() > o.budget) break;
      const long k = draw_nu(rng, [&](double z) { nn.positions.push_back(x + z); });
      saturating_add(nn.born, static_cast<std::uint64_t>(k), nn.saturated);
      if (seeds && seed_coin(rng)) {
        ne.positions.push_back(x + seeding->displacement.sample(rng));
        ne.switch_gen.push_back(n + 1);
        saturating_add(ne.born, 1, ne.saturated);
      }
    }
    if (eta) {
      const auto& ce = s.type[1];
      for (std::size_t i = 0; i < ce.positions.size(); ++i) {
        const double x = ce.positions[i];
        const int sw = ce.switch_gen[i];
        const long k = (*draw_eta)(rng, [&](double z) {
          ne.positions.push_back(x + z);
          ne.switch_gen.push_back(sw);
        });
        saturating_add(ne.born, static_cast<std::uint64_t>(k), ne.saturated);
      }
    }
    if (n == 0 && nn.positions.size() > o.budget)
      throw BudgetError("first family already exceeds the particle budget");

    next.exact = s.exact;
    for (int t = 0; t < st.types; ++t) {
      auto& ts = next.type[static_cast<std::size_t>(t)];
      if (ts.positions.size() > o.budget) pruning[static_cast<std::size_t>(t)] = true;
      if (pruning[static_cast<std::size_t>(t)]) {
        if (next.exact) {
          next.exact = false;
          st.diag.budget_bound_at = next.n;
        }
        ts.pruned = prune(ts, o.budget, o.window);
        st.diag.pruned += ts.pruned;
      }
    }
    if (!next.exact && s.exact) {
      last_exact = s.type[0].positions;
      last_exact_n = s.n;
      if (o.stop_when_inexact) break;
    }
    for (int t = 0; t < st.types; ++t) {
      const auto& ts = next.type[static_cast<std::size_t>(t)];
      saturating_add(st.diag.born, ts.born, st.diag.born_saturated);
      st.diag.born_saturated = st.diag.born_saturated || ts.saturated;
    }
    s = std::move(next);
    record(s);
  }
  if (s.exact) {
    last_exact = s.type[0].positions;
    last_exact_n = s.n;
  }
  st.diag.exact_until = last_exact_n;
  if (!eta && o.count_horizon > last_exact_n) {
    for (double a : o.count_a)
      st.counts.push_back({o.count_horizon, 0, a,
                           projected_log_count(nu, last_exact, last_exact_n, o.count_horizon, a),
                           false});
  }
  return st;
}

// ---------------------------------------------------------------------------
// Hybrid engine.

struct Individual {
  double x;
  double sw;  // switch generation, -1 for none
};

struct Dense {
  long base = 0;
  std::vector<long double> mass;
  std::vector<long double> swm;  // mass-weighted switch generation

  bool empty() const { return mass.empty(); }
  long end() const { return base + static_cast<long>(mass.size()); }

  void ensure(long lo, long hi_exclusive) {
    if (mass.empty()) {
      base = lo;
      mass.assign(static_cast<std::size_t>(hi_exclusive - lo), 0.0L);
      swm.assign(mass.size(), 0.0L);
      return;
    }
    if (lo < base) {
      const auto grow = static_cast<std::size_t>(base - lo);
      mass.insert(mass.begin(), grow, 0.0L);
      swm.insert(swm.begin(), grow, 0.0L);
      base = lo;
    }
    if (hi_exclusive > end()) {
      const auto grow = static_cast<std::size_t>(hi_exclusive - end());
      mass.insert(mass.end(), grow, 0.0L);
      swm.insert(swm.end(), grow, 0.0L);
    }
  }

  void trim() {
    std::size_t a = 0, b = mass.size();
    while (a < b && mass[a] <= 0.0L) ++a;
    while (b > a && mass[b - 1] <= 0.0L) --b;
    if (a == b) {
      mass.clear();
      swm.clear();
      return;
    }
    mass = std::vector<long double>(mass.begin() + static_cast<long>(a), mass.begin() + static_cast<long>(b));
    swm = std::vector<long double>(swm.begin() + static_cast<long>(a), swm.begin() + static_cast<long>(b));
    base += static_cast<long>(a);
  }
};

struct Kernel {
  long first = 0;
  std::vector<long double> w;  // expected daughters per lattice shift
};

inline Kernel make_kernel(const Displacement& d, double scale, double h) {
  const LatticeWeights lw = d.cell_weights(h);
  Kernel k{lw.first_offset, {}};
  for (double w : lw.weights) k.w.push_back(static_cast<long double>(scale) * w);
  return k;
}

/// dst += src convolved with k. With fixed_sw set, the switch generation of
/// the new mass is that value; otherwise it is inherited.
inline void convolve_into(const Dense& src, const Kernel& k, std::optional<long double> fixed_sw,
                          Dense& dst) {
  if (src.empty()) return;
  const long lo = src.base + k.first;
  const long hi = src.end() + k.first + static_cast<long>(k.w.size()) - 1;
  dst.ensure(lo, hi);
  const std::size_t off = static_cast<std::size_t>(lo - dst.base);
  const std::size_t nk = k.w.size();
  for (std::size_t i = 0; i < src.mass.size(); ++i) {
    const long double m = src.mass[i];
    if (m <= 0.0L) continue;
    long double* out = dst.mass.data() + off + i;
    for (std::size_t j = 0; j < nk; ++j) out[j] += m * k.w[j];
    const long double s = fixed_sw ? m * *fixed_sw : src.swm[i];
    long double* os = dst.swm.data() + off + i;
    for (std::size_t j = 0; j < nk; ++j) os[j] += s * k.w[j];
  }
}

struct HybridPop {
  std::vector<Individual> ind;
  Dense dense;

  bool empty() const { return ind.empty() && dense.empty(); }

  /// Rightmost position and the switch generation carried there.
  std::pair<double, double> leader(double h) const {
    if (!ind.empty()) {
      const auto it = std::max_element(ind.begin(), ind.end(),
                                       [](const auto& a, const auto& b) { return a.x < b.x; });
      return {it->x, it->sw};
    }
    if (!dense.empty()) {
      const std::size_t last = dense.mass.size() - 1;
      return {static_cast<double>(dense.end()) * h,
              static_cast<double>(dense.swm[last] / dense.mass[last])};
    }
    return {-std::numeric_limits<double>::infinity(), -1.0};
  }
};

struct HybridPolicy {
  double h;
  double threshold;
  double window;
  std::size_t budget;
};

/// Turns expected dense mass plus freshly born particles into the next
/// population. Returns the number of particles aggregated into mass.
inline std::uint64_t resolve(HybridPop& out, const Dense& expected, std::vector<Individual> kids,
                             const HybridPolicy& pol, Rng& rng, bool& exact) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dense d;
  d.base = expected.base;
  d.mass.assign(expected.mass.size(), 0.0L);
  d.swm.assign(expected.mass.size(), 0.0L);
  for (std::size_t j = 0; j < expected.mass.size(); ++j) {
    const long double e = expected.mass[j];
    if (!(e > 1e-30L)) continue;
    const long double mean_sw = expected.swm[j] / e;
    if (e >= pol.threshold) {
      const long double m = std::max(0.0L, e + std::sqrt(e) * static_cast<long double>(gauss(rng)));
      d.mass[j] = m;
      d.swm[j] = m * mean_sw;
    } else {
      std::poisson_distribution<long> pois(static_cast<double>(e));
      const long c = pois(rng);
      for (long i = 0; i < c; ++i)
        kids.push_back({(static_cast<double>(expected.base + static_cast<long>(j)) + unif(rng)) * pol.h,
                        static_cast<double>(mean_sw)});
    }
  }
  if (!expected.mass.empty()) exact = false;

  std::uint64_t merged = 0;
  auto bin_of = [&](double x) { return static_cast<long>(std::floor(x / pol.h)); };

  // Particles landing in a dense bin join its mass.
  std::vector<Individual> sparse;
  sparse.reserve(kids.size());
  for (const auto& k : kids) {
    const long b = bin_of(k.x);
    if (b >= d.base && b < d.end() && d.mass[static_cast<std::size_t>(b - d.base)] > 0.0L) {
      d.mass[static_cast<std::size_t>(b - d.base)] += 1.0L;
      d.swm[static_cast<std::size_t>(b - d.base)] += k.sw;
      ++merged;
    } else {
      sparse.push_back(k);
    }
  }

  // Crowded sparse bins turn dense.
  if (!sparse.empty()) {
    long lo = std::numeric_limits<long>::max(), hi = std::numeric_limits<long>::min();
    for (const auto& k : sparse) {
      lo = std::min(lo, bin_of(k.x));
      hi = std::max(hi, bin_of(k.x));
    }
    std::vector<std::uint32_t> occ(static_cast<std::size_t>(hi - lo + 1), 0);
    for (const auto& k : sparse) ++occ[static_cast<std::size_t>(bin_of(k.x) - lo)];
    bool any = false;
    for (auto c : occ) any = any || c > pol.threshold;
    if (any) {
      std::vector<Individual> keep;
      keep.reserve(sparse.size());
      for (const auto& k : sparse) {
        const long b = bin_of(k.x);
        if (occ[static_cast<std::size_t>(b - lo)] > pol.threshold) {
          d.ensure(b, b + 1);
          d.mass[static_cast<std::size_t>(b - d.base)] += 1.0L;
          d.swm[static_cast<std::size_t>(b - d.base)] += k.sw;
          ++merged;
          exact = false;
        } else {
          keep.push_back(k);
        }
      }
      sparse = std::move(keep);
    }
  }
  d.trim();
  out.dense = std::move(d);
  out.ind = std::move(sparse);

  // Window behind the leader.
  if (std::isfinite(pol.window) && !out.empty()) {
    const double cut = out.leader(pol.h).first - pol.window;
    const std::size_t before = out.ind.size();
    out.ind.erase(std::remove_if(out.ind.begin(), out.ind.end(), [&](const auto& k) { return k.x < cut; }),
                  out.ind.end());
    if (out.ind.size() != before) exact = false;
    merged += before - out.ind.size();
    const long first_kept = bin_of(cut);
    if (!out.dense.empty() && out.dense.base < first_kept) {
      for (long b = out.dense.base; b < std::min(first_kept, out.dense.end()); ++b)
        out.dense.mass[static_cast<std::size_t>(b - out.dense.base)] = 0.0L;
      out.dense.trim();
    }
  }

  // Budget: the leftmost particles beyond it are aggregated into mass.
  if (out.ind.size() > pol.budget) {
    exact = false;
    auto& v = out.ind;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(pol.budget), v.end(),
                     [](const auto& a, const auto& b) { return a.x > b.x; });
    for (std::size_t i = pol.budget; i < v.size(); ++i) {
      const long b = bin_of(v[i].x);
      out.dense.ensure(b, b + 1);
      out.dense.mass[static_cast<std::size_t>(b - out.dense.base)] += 1.0L;
      out.dense.swm[static_cast<std::size_t>(b - out.dense.base)] += v[i].sw;
      ++merged;
    }
    v.resize(pol.budget);
  }
  return merged;
}

inline TrajectoryStats run_hybrid(const ReproductionLaw& nu, const ReproductionLaw* eta,
                                  const Seeding* seeding, const SimOptions& o,
                                  std::uint64_t seed) {
  Rng rng(seed);
  TrajectoryStats st;
  st.seed = seed;
  st.types = eta ? 2 : 1;
  const double h = o.bin_width;
  const HybridPolicy pol{h, o.dense_threshold, o.window, o.budget};
  const Kernel kn = make_kernel(nu.displacement(), nu.offspring().mean(), h);
  const bool seeds = eta && seeding && seeding->prob > 0.0;
  Kernel ke, ks;
  if (eta) ke = make_kernel(eta->displacement(), eta->offspring().mean(), h);
  if (seeds) ks = make_kernel(seeding->displacement, seeding->prob, h);
  std::bernoulli_distribution seed_coin(seeds ? seeding->prob : 0.0);

  FamilySampler draw_nu(nu);
  std::optional<FamilySampler> draw_eta;
  if (eta) draw_eta.emplace(*eta);

  HybridPop pn, pe;
  pn.ind.push_back({0.0, -1.0});
  bool exact = true;
  long double born = 1.0L;

  auto positions = [](const HybridPop& p) {
    std::vector<double> xs;
    xs.reserve(p.ind.size());
    for (const auto& k : p.ind) xs.push_back(k.x);
    return xs;
  };
  auto record = [&](int n) {
    st.max_nu.push_back(pn.leader(h).first);
    if (eta) {
      const auto [x, sw] = pe.leader(h);
      st.max_eta.push_back(x);
      st.switch_gen.push_back(pe.empty() ? -1 : static_cast<int>(std::lround(sw)));
    }
    if (exact) {
      st.diag.exact_until = n;
      record_counts(st, n, 0, positions(pn), o.count_a);
      if (eta) record_counts(st, n, 1, positions(pe), o.count_a);
    }
  };
  record(0);

  for (int n = 0; n < o.n_max; ++n) {
    Dense en, ee;
    convolve_into(pn.dense, kn, 0.0L, en);
    if (eta) convolve_into(pe.dense, ke, std::nullopt, ee);
    if (seeds) convolve_into(pn.dense, ks, static_cast<long double>(n + 1), ee);

    std::vector<Individual> kn_kids, ke_kids;
    kn_kids.reserve(pn.ind.size() * 3);
    for (const auto& p : pn.ind) {
      draw_nu(rng, [&](double z) { kn_kids.push_back({p.x + z, -1.0}); });
      if (seeds && seed_coin(rng))
        ke_kids.push_back({p.x + seeding->displacement.sample(rng), static_cast<double>(n + 1)});
    }
    if (eta)
      for (const auto& p : pe.ind)
        (*draw_eta)(rng, [&](double z) { ke_kids.push_back({p.x + z, p.sw}); });
    if (n == 0 && kn_kids.size() > o.budget)
      throw BudgetError("first family already exceeds the particle budget");
    born += static_cast<long double>(kn_kids.size() + ke_kids.size());
    for (auto m : en.mass) born += m;
    for (auto m : ee.mass) born += m;

    const bool was_exact = exact;
    HybridPop nn, ne;
    st.diag.pruned += resolve(nn, en, std::move(kn_kids), pol, rng, exact);
    if (eta) st.diag.pruned += resolve(ne, ee, std::move(ke_kids), pol, rng, exact);
    if (was_exact && !exact) {
      st.diag.budget_bound_at = n + 1;
      if (o.stop_when_inexact) break;
    }
    pn = std::move(nn);
    pe = std::move(ne);
    record(n + 1);
  }
  const long double cap = static_cast<long double>(std::numeric_limits<std::uint64_t>::max());
  st.diag.born_saturated = born >= cap;
  st.diag.born = st.diag.born_saturated ? std::numeric_limits<std::uint64_t>::max()
                                        : static_cast<std::uint64_t>(born);
  return st;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline TrajectoryStats run_one_type(const ReproductionLaw& law, const SimOptions& o,
                                    std::uint64_t seed) {
  detail::validate(o);
  if (law.offspring().mean() < 1.0) throw ParamError("offspring mean below one");
  return o.engine == Engine::kPruned ? detail::run_pruned(law, nullptr, nullptr, o, seed)
                                     : detail::run_hybrid(law, nullptr, nullptr, o, seed);
}

inline TrajectoryStats run_one_type(const ReproductionLaw& law, int n_max, std::size_t budget,
                                    double window, std::uint64_t seed) {
  SimOptions o;
  o.n_max = n_max;
  o.budget = budget;
  o.window = window;
  return run_one_type(law, o, seed);
}

/// Starts from a single first-class particle at the origin.
inline TrajectoryStats run_two_type(const TwoTypeSystem& sys, const SimOptions& o,
                                    std::uint64_t seed) {
  detail::validate(o);
  if (!(sys.seeding.prob >= 0.0 && sys.seeding.prob <= 1.0))
    throw ParamError("seeding probability must lie in [0,1]");
  return o.engine == Engine::kPruned ? detail::run_pruned(sys.nu, &sys.eta, &sys.seeding, o, seed)
                                     : detail::run_hybrid(sys.nu, &sys.eta, &sys.seeding, o, seed);
}

inline std::vector<TrajectoryStats> simulate_one_type(const ReproductionLaw& law,
                                                      const SimOptions& o, std::size_t replicates,
                                                      std::uint64_t master, unsigned threads = 1) {
  return run_indexed<TrajectoryStats>(replicates, threads, [&](std::size_t r) {
    TrajectoryStats st = run_one_type(law, o, stream_seed(master, r));
    st.replicate = r;
    return st;
  });
}

inline std::vector<TrajectoryStats> simulate_two_type(const TwoTypeSystem& sys,
                                                      const SimOptions& o, std::size_t replicates,
                                                      std::uint64_t master, unsigned threads = 1) {
  return run_indexed<TrajectoryStats>(replicates, threads, [&](std::size_t r) {
    TrajectoryStats st = run_two_type(sys, o, stream_seed(master, r));
    st.replicate = r;
    return st;
  });
}

// ---------------------------------------------------------------------------
// Statistics.

struct ProfileRow {
  std::size_t replicate = 0;
  int n = 0;
  int type = 0;
  double a = 0.0;
  double value = 0.0;  // (1/n) log Z[na, inf); -inf for an empty half-line
  bool exact = true;
};

/// Rates (1/n) log Z[na, inf) from the censuses of one trajectory. Projected
/// rows are returned only when asked for.
inline std::vector<ProfileRow> count_profile(const TrajectoryStats& st,
                                             std::span<const double> a_values,
                                             bool include_projected = false, int type = 0) {
  const bool any_exact = std::any_of(st.counts.begin(), st.counts.end(),
                                     [](const CountRow& c) { return c.exact; });
  if (!any_exact) throw StateError("trajectory has no exact census");
  std::vector<ProfileRow> rows;
  for (double a : a_values) {
    bool found = false;
    for (const auto& c : st.counts) {
      if (c.type != type || std::abs(c.a - a) > 1e-12) continue;
      if (!c.exact && !include_projected) continue;
      found = true;
      rows.push_back({st.replicate, c.n, c.type, a, c.log_count / c.n, c.exact});
    }
    if (!found) throw StateError("no census recorded at a=" + std::to_string(a));
  }
  return rows;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.count = xs.size();
  if (xs.empty()) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(v / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

/// Mean of M_n / n across replicates at generation n (default: last).
inline MeanSe speed_estimate(std::span<const TrajectoryStats> runs, int type = 0, int n = -1) {
  std::vector<double> xs;
  for (const auto& st : runs) {
    const auto& m = type == 0 ? st.max_nu : st.max_eta;
    if (m.empty()) continue;
    const std::size_t i = n < 0 ? m.size() - 1 : static_cast<std::size_t>(n);
    if (i >= m.size() || i == 0 || !std::isfinite(m[i])) continue;
    xs.push_back(m[i] / static_cast<double>(i));
  }
  return mean_se(xs);
}

struct CenteringFit {
  double slope = 0.0;
  double se = 0.0;
  double predicted = 0.0;  // -3 / (2 vartheta)
  int n_lo = 0;
  int n_hi = 0;
};

/// Least-squares slope of M_n - n*gamma against log n over [n_max/4, n_max].
/// The mean profile's slope equals the mean of per-replicate slopes, whose
/// spread gives the standard error.
inline CenteringFit centering_slope(std::span<const TrajectoryStats> runs, double gamma,
                                    double vartheta, int type = 0) {
  CenteringFit fit;
  fit.predicted = -3.0 / (2.0 * vartheta);
  if (runs.empty()) return fit;
  const auto& first = type == 0 ? runs.front().max_nu : runs.front().max_eta;
  const int n_max = static_cast<int>(first.size()) - 1;
  fit.n_hi = n_max;
  fit.n_lo = std::max(1, n_max / 4);
  std::vector<double> xs;
  for (int n = fit.n_lo; n <= fit.n_hi; ++n) xs.push_back(std::log(static_cast<double>(n)));
  double xbar = 0.0;
  for (double x : xs) xbar += x;
  xbar /= static_cast<double>(xs.size());
  double sxx = 0.0;
  for (double x : xs) sxx += (x - xbar) * (x - xbar);
  std::vector<double> slopes;
  for (const auto& st : runs) {
    const auto& m = type == 0 ? st.max_nu : st.max_eta;
    if (static_cast<int>(m.size()) - 1 < fit.n_hi) continue;
    double sxy = 0.0;
    for (int n = fit.n_lo; n <= fit.n_hi; ++n) {
      const double y = m[static_cast<std::size_t>(n)] - n * gamma;
      sxy += (xs[static_cast<std::size_t>(n - fit.n_lo)] - xbar) * y;
    }
    slopes.push_back(sxx > 0.0 ? sxy / sxx : 0.0);
  }
  const MeanSe ms = mean_se(slopes);
  fit.slope = ms.mean;
  fit.se = ms.se;
  return fit;
}

/// Fraction of time the rightmost terminal-class particle's line spent in
/// the first class, at generation n (default: last), over replicates.
inline MeanSe switch_fraction(std::span<const TrajectoryStats> runs, int n = -1) {
  std::vector<double> xs;
  for (const auto& st : runs) {
    if (st.switch_gen.empty()) continue;
    const std::size_t i = n < 0 ? st.switch_gen.size() - 1 : static_cast<std::size_t>(n);
    if (i == 0 || i >= st.switch_gen.size() || st.switch_gen[i] < 0) continue;
    xs.push_back(static_cast<double>(st.switch_gen[i]) / static_cast<double>(i));
  }
  return mean_se(xs);
}

/// A common-displacement law seen family-by-family: each family is a
/// particle whose daughters (the next families) move independently.
inline ReproductionLaw coupled_independent(const ReproductionLaw& law) {
  return ReproductionLaw(law.offspring(), law.displacement(), Mechanism::kIndependent);
}

}  // namespace brw

#endif  // BRW_MC_SIM_HPP
