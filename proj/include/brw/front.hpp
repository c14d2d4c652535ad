#ifndef BRW_FRONT_HPP
#define BRW_FRONT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "brw/error.hpp"
#include "brw/mc_sim.hpp"
#include "brw/models.hpp"

namespace brw {

struct FrontOptions {
  double h = 0.01;
  double half_width = 40.0;  // window is [x_n - half_width, x_n + half_width]
  double level = 0.5;
  bool fast = false;         // FFT convolution instead of the direct sum
};

/// u^(n) on the lattice x_i = (offset + i) h. Outside the window the
/// profile is extended by constants, 1 to the left and 0 to the right for
/// fronts.
struct FrontProfile {
  double h = 0.01;
  long offset = 0;
  std::vector<double> values;
  double left_fill = 1.0;
  double right_fill = 0.0;
  double position = 0.0;  // level crossing x_n
  int n = 0;
  bool heaviside = false;  // still the untouched step datum

  double x(std::size_t i) const { return (static_cast<double>(offset) + static_cast<double>(i)) * h; }

  double cell(long j) const {
    if (j < offset) return left_fill;
    if (j >= offset + static_cast<long>(values.size())) return right_fill;
    return values[static_cast<std::size_t>(j - offset)];
  }

  /// Linear interpolation with the boundary extension.
  double at(double xq) const {
    const double u = xq / h;
    const long j = static_cast<long>(std::floor(u));
    const double t = u - static_cast<double>(j);
    return (1.0 - t) * cell(j) + t * cell(j + 1);
  }

  bool nonincreasing(double tol = 1e-12) const {
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[i - 1] + tol) return false;
    return true;
  }

  static FrontProfile step(double h, double half_width) {
    FrontProfile p;
    p.h = h;
    const long half = static_cast<long>(std::llround(half_width / h));
    p.offset = -half;
    p.values.resize(static_cast<std::size_t>(2 * half));
    for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] = p.x(i) < 0.0 ? 1.0 : 0.0;
    p.heaviside = true;
    p.position = 0.0;
    return p;
  }

  static FrontProfile constant(double value, double h, long offset, std::size_t size) {
    FrontProfile p;
    p.h = h;
    p.offset = offset;
    p.values.assign(size, value);
    p.left_fill = p.right_fill = value;
    return p;
  }
};

namespace detail {

/// Lattice weights of the step law at the profile spacing. Atoms must sit
/// on the lattice for the recursion to be exact.
inline LatticeWeights front_kernel(const Displacement& d, double h) {
  if (std::holds_alternative<GaussianStep>(d.variant())) return d.trapezoid_weights(h);
  std::vector<double> atoms;
  if (auto* p = std::get_if<PointMassStep>(&d.variant())) {
    atoms.push_back(p->position);
  } else {
    const auto& t = std::get<TwoPointStep>(d.variant());
    atoms = {t.left, t.right};
  }
  for (double a : atoms) {
    const double u = a / h;
    if (std::abs(u - std::round(u)) > 1e-9)
      throw KernelError("atom at " + std::to_string(a) + " is off the lattice of step " + std::to_string(h));
  }
  return d.trapezoid_weights(h);
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// 'Valid' part of the linear convolution of ext (length L + K - 1) with k
/// (length K): out[i] = sum_j k[j] ext[i + K - 1 - j], i < L.
inline std::vector<double> convolve_valid_direct(std::span<const double> ext, std::span<const double> k) {
  const std::size_t K = k.size();
  const std::size_t L = ext.size() - K + 1;
  std::vector<double> out(L, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    double s = 0.0;
    const double* e = ext.data() + i + K - 1;
    for (std::size_t j = 0; j < K; ++j) s += k[j] * e[-static_cast<long>(j)];
    out[i] = s;
  }
  return out;
}

inline std::vector<double> convolve_valid_fft(std::span<const double> ext, std::span<const double> k) {
  const std::size_t K = k.size();
  const std::size_t L = ext.size() - K + 1;
  std::size_t n = 1;
  while (n < ext.size() + K - 1) n <<= 1;
  const std::size_t nc = n / 2 + 1;
  double* a = fftw_alloc_real(n);
  double* b = fftw_alloc_real(n);
  fftw_complex* fa = fftw_alloc_complex(nc);
  fftw_complex* fb = fftw_alloc_complex(nc);
  fftw_plan pa, pb, pinv;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), a, fa, FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), b, fb, FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa, a, FFTW_ESTIMATE);
  }
  std::fill(a, a + n, 0.0);
  std::fill(b, b + n, 0.0);
  std::copy(ext.begin(), ext.end(), a);
  std::copy(k.begin(), k.end(), b);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t i = 0; i < nc; ++i) {
    const double re = fa[i][0] * fb[i][0] - fa[i][1] * fb[i][1];
    const double im = fa[i][0] * fb[i][1] + fa[i][1] * fb[i][0];
    fa[i][0] = re;
    fa[i][1] = im;
  }
  fftw_execute(pinv);
  std::vector<double> out(L);
  for (std::size_t i = 0; i < L; ++i) out[i] = a[i + K - 1] / static_cast<double>(n);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pinv);
  }
  fftw_free(a);
  fftw_free(b);
  fftw_free(fa);
  fftw_free(fb);
  return out;
}

/// (u * f)(x_i) = sum_k f_k u(x_i - k h) on the window of u.
inline std::vector<double> smooth(const FrontProfile& u, const LatticeWeights& f, bool fast) {
  const long K = static_cast<long>(f.weights.size());
  const long kmax = f.first_offset + K - 1;
  const long L = static_cast<long>(u.values.size());
  // ext covers lattice indices [offset - kmax, offset + L - 1 - first_offset].
  std::vector<double> ext(static_cast<std::size_t>(L + K - 1));
  for (long i = 0; i < static_cast<long>(ext.size()); ++i) ext[static_cast<std::size_t>(i)] = u.cell(u.offset - kmax + i);
  if (!fast) return convolve_valid_direct(ext, f.weights);
  // Transform round-off (~1e-16) ahead of a pulled front would be amplified
  // by the branching every step, so small entries are redone directly.
  std::vector<double> out = convolve_valid_fft(ext, f.weights);
  const auto nk = static_cast<std::size_t>(K);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] > 1e-6) continue;
    double acc = 0.0;
    const double* e = ext.data() + i + nk - 1;
    for (std::size_t j = 0; j < nk; ++j) acc += f.weights[j] * e[-static_cast<long>(j)];
    out[i] = acc;
  }
  return out;
}

inline double level_crossing(const FrontProfile& p, double level) {
  const auto& v = p.values;
  if (v.empty()) return p.position;
  if (v.back() >= level) throw RangeError("front ran past the right edge of the window");
  if (v.front() < level) throw RangeError("front fell behind the left edge of the window");
  std::size_t i = v.size() - 1;
  while (v[i] < level) --i;
  const double t = (v[i] - level) / (v[i] - v[i + 1]);
  return p.x(i) + t * p.h;
}

inline void check_range(std::span<const double> v) {
  for (double x : v)
    if (!(x >= -1e-12 && x <= 1.0 + 1e-12))
      throw RangeError("profile value " + std::to_string(x) + " outside [0,1]");
}

}  // namespace detail

/// One application of Q on the window of u, without recentring.
/// Independent steps: v = 1 - g(1 - u*f). Common steps: v = (1 - g(1 - u))*f.
/// The step datum's first image uses the exact tail P(X > x).
inline FrontProfile apply_q_fixed(const FrontProfile& u, const ReproductionLaw& law, bool fast = false) {
  const auto f = detail::front_kernel(law.displacement(), u.h);
  FrontProfile v = u;
  v.n = u.n + 1;
  v.heaviside = false;
  const auto& g = law.offspring();
  if (u.heaviside) {
    for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = law.displacement().tail(u.x(i));
    if (law.mechanism() == Mechanism::kIndependent)
      for (double& x : v.values) x = g.one_minus_pgf_complement(x);
  } else if (law.mechanism() == Mechanism::kIndependent) {
    v.values = detail::smooth(u, f, fast);
    for (double& x : v.values) x = g.one_minus_pgf_complement(x);
  } else {
    FrontProfile gu = u;
    for (double& x : gu.values) x = g.one_minus_pgf_complement(x);
    v.values = detail::smooth(gu, f, fast);
  }
  v.left_fill = g.one_minus_pgf_complement(u.left_fill);
  v.right_fill = g.one_minus_pgf_complement(u.right_fill);
  detail::check_range(v.values);
  return v;
}

/// Q followed by recentring the window on the new level crossing.
inline FrontProfile apply_q(const FrontProfile& u, const ReproductionLaw& law,
                            const FrontOptions& opt = {}) {
  FrontProfile v = apply_q_fixed(u, law, opt.fast);
  if (u.nonincreasing() && !v.nonincreasing())
    throw RangeError("Q broke monotonicity of the profile");
  v.position = detail::level_crossing(v, opt.level);
  const long half = static_cast<long>(v.values.size() / 2);
  const long new_offset = static_cast<long>(std::llround(v.position / v.h)) - half;
  if (new_offset != v.offset) {
    std::vector<double> shifted(v.values.size());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = v.cell(new_offset + static_cast<long>(i));
    v.values = std::move(shifted);
    v.offset = new_offset;
  }
  return v;
}

struct FrontRow {
  int n = 0;
  double x = 0.0;
  double drift = 0.0;     // x_n - x_{n-1}
  double sup_diff = 0.0;  // sup |u^(n)(x_n + y) - u^(n-1)(x_{n-1} + y)|
};

struct FrontResult {
  double speed = 0.0;  // least-squares slope of x_n on [n_max/2, n_max]
  std::vector<FrontRow> rows;
  std::map<int, FrontProfile> snapshots;
  FrontProfile last;
};

inline double centered_sup_diff(const FrontProfile& now, const FrontProfile& before) {
  double s = 0.0;
  for (std::size_t i = 0; i < now.values.size(); ++i) {
    const double y = now.x(i) - now.position;
    s = std::max(s, std::abs(now.values[i] - before.at(before.position + y)));
  }
  return s;
}

inline FrontResult front_speed(const ReproductionLaw& law, int n_max, const FrontOptions& opt = {},
                               std::span<const int> snapshot_at = {}) {
  if (n_max < 100) throw ParamError("front_speed needs n_max >= 100");
  if (!(opt.h > 0.0)) throw ParamError("grid step must be positive");
  FrontResult res;
  FrontProfile u = FrontProfile::step(opt.h, opt.half_width);
  auto keep = [&](const FrontProfile& p) {
    if (std::find(snapshot_at.begin(), snapshot_at.end(), p.n) != snapshot_at.end()) res.snapshots[p.n] = p;
  };
  keep(u);
  res.rows.push_back({0, u.position, 0.0, 0.0});
  for (int n = 1; n <= n_max; ++n) {
    FrontProfile v = apply_q(u, law, opt);
    res.rows.push_back({n, v.position, v.position - u.position, centered_sup_diff(v, u)});
    keep(v);
    u = std::move(v);
  }
  const int lo = n_max / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int n = lo; n <= n_max; ++n) {
    const double x = n, y = res.rows[static_cast<std::size_t>(n)].x;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  res.speed = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  res.last = std::move(u);
  return res;
}

struct ConsistencyRow {
  double x = 0.0;
  double u = 0.0;      // iterated Q
  double p_mc = 0.0;   // fraction of replicates with M_n > x
  double se = 0.0;     // binomial standard error under u
  double z = 0.0;
};

/// Iterated Q from the step datum against Monte Carlo P(M_n > x) from exact
/// simulations.
inline std::vector<ConsistencyRow> mc_consistency(const ReproductionLaw& law, int n,
                                                  std::span<const double> x_values,
                                                  std::size_t replicates, std::uint64_t seed,
                                                  const FrontOptions& opt = {}, unsigned threads = 1) {
  if (n < 0) throw ParamError("n must be nonnegative");
  FrontProfile u = FrontProfile::step(opt.h, opt.half_width);
  for (int k = 0; k < n; ++k) u = apply_q(u, law, opt);

  SimOptions so;
  so.n_max = n;
  so.budget = std::numeric_limits<std::size_t>::max();
  so.window = kUnbounded;
  const auto runs = simulate_one_type(law, so, replicates, seed, threads);

  std::vector<ConsistencyRow> rows;
  for (double x : x_values) {
    ConsistencyRow r;
    r.x = x;
    r.u = u.at(x);
    std::size_t hits = 0;
    for (const auto& st : runs) hits += st.max_nu[static_cast<std::size_t>(n)] > x;
    r.p_mc = static_cast<double>(hits) / static_cast<double>(replicates);
    r.se = std::sqrt(std::max(0.0, r.u * (1.0 - r.u)) / static_cast<double>(replicates));
    if (r.se > 0.0) r.z = (r.p_mc - r.u) / r.se;
    else r.z = std::abs(r.p_mc - r.u) < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace brw

#endif  // BRW_FRONT_HPP
