#ifndef BRW_EXTENDED_REAL_HPP
#define BRW_EXTENDED_REAL_HPP

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>

#include "brw/error.hpp"

namespace brw {

/// A real number or +infinity. The infinity is a tag, never a large float,
/// and it absorbs addition and comparison the way an extended real should.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT: implicit on purpose

  static constexpr ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  /// Finite payload. Calling this on +inf is a logic error.
  double value() const {
    if (infinite_) throw DomainError("value() requested from +inf");
    return value_;
  }

  /// Value with +inf mapped onto IEEE inf; only for printing and plotting.
  double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr bool operator==(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  friend constexpr std::partial_ordering operator<=>(const ExtReal& a,
                                                     const ExtReal& b) {
    if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
    if (a.infinite_) return std::partial_ordering::greater;
    if (b.infinite_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }

  friend constexpr ExtReal operator+(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return a.value_ + b.value_;
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtReal& x) {
    if (x.infinite_) return os << "inf";
    return os << x.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline ExtReal min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }
inline ExtReal max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }

/// Builds an ExtReal from a computation that may have overflowed. NaN is a
/// bug upstream and is rejected rather than silently tagged.
inline ExtReal from_double(double v) {
  if (std::isnan(v)) throw DomainError("NaN produced where a value was expected");
  if (v == std::numeric_limits<double>::infinity()) return ExtReal::infinity();
  if (v == -std::numeric_limits<double>::infinity())
    throw DomainError("-inf is outside the extended range used here");
  return v;
}

}  // namespace brw

#endif  // BRW_EXTENDED_REAL_HPP
