#ifndef BRW_CSV_HPP
#define BRW_CSV_HPP

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "brw/extended_real.hpp"
#include "brw/front.hpp"
#include "brw/mc_sim.hpp"
#include "brw/speeds.hpp"

namespace brw::csv {

/// 17 significant digits; infinities as "inf" / "-inf".
inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string num(const ExtReal& v) { return v.is_infinite() ? "inf" : num(v.value()); }

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : ""; }

template <class... T>
void row(std::ostream& os, const T&... fields) {
  bool first = true;
  ((os << (first ? "" : ",") << fields, first = false), ...);
  os << '\n';
}

inline void speed_report(std::ostream& os, const SpeedResult& r) {
  row(os, "gamma", "vartheta", "theta_star", "gamma_dual", "route_gap", "root_residual", "gamma_source");
  row(os, num(r.gamma), num(r.vartheta), num(r.theta_star), num(r.gamma_dual),
      num(r.diagnostics.route_gap), num(r.diagnostics.root_residual), r.diagnostics.gamma_source);
}

inline void anomalous_report(std::ostream& os, const AnomalousReport& r, double reversed,
                             double expected_numbers) {
  row(os, "gamma_nu", "gamma_eta", "gamma_dagger", "route_minorant", "route_formula", "anomalous",
      "reversed_speed", "expected_numbers_speed");
  row(os, num(r.gamma_nu), num(r.gamma_eta), num(r.gamma_dagger), num(r.route_minorant),
      num(r.route_formula), r.anomalous ? 1 : 0, num(reversed), num(expected_numbers));
}

inline void figure(std::ostream& os, std::span<const FigureRow> rows) {
  row(os, "a", "kswept_nu", "kdual_eta", "cv");
  for (const auto& r : rows) row(os, num(r.a), num(r.kswept_nu), num(r.kdual_eta), num(r.cv));
}

/// Empty populations (M_n = -inf) produce no rows.
inline void trajectory(std::ostream& os, std::span<const TrajectoryStats> runs) {
  row(os, "replicate", "n", "type", "M_n");
  for (const auto& st : runs) {
    for (std::size_t n = 0; n < st.max_nu.size(); ++n)
      if (std::isfinite(st.max_nu[n])) row(os, st.replicate, n, "nu", num(st.max_nu[n]));
    for (std::size_t n = 0; n < st.max_eta.size(); ++n)
      if (std::isfinite(st.max_eta[n])) row(os, st.replicate, n, "eta", num(st.max_eta[n]));
  }
}

inline void counts(std::ostream& os, std::span<const TrajectoryStats> runs) {
  row(os, "replicate", "n", "a", "log_count", "type", "exact");
  for (const auto& st : runs)
    for (const auto& c : st.counts)
      row(os, st.replicate, c.n, num(c.a), num(c.log_count), c.type == 0 ? "nu" : "eta", c.exact ? 1 : 0);
}

struct SlopeRow {
  std::string quantity;
  std::string type;
  double estimate;
  double se;
  double reference;
};

inline void slopes(std::ostream& os, std::span<const SlopeRow> rows) {
  row(os, "quantity", "type", "estimate", "se", "reference");
  for (const auto& r : rows) row(os, r.quantity, r.type, num(r.estimate), num(r.se), num(r.reference));
}

inline void front(std::ostream& os, std::span<const FrontRow> rows) {
  row(os, "n", "x_n", "drift", "profile_sup_diff");
  for (const auto& r : rows) row(os, r.n, num(r.x), num(r.drift), num(r.sup_diff));
}

inline void profiles(std::ostream& os, const std::map<int, FrontProfile>& snaps) {
  row(os, "n", "x", "u");
  for (const auto& [n, p] : snaps)
    for (std::size_t i = 0; i < p.values.size(); ++i) row(os, n, num(p.x(i)), num(p.values[i]));
}

}  // namespace brw::csv

#endif  // BRW_CSV_HPP
