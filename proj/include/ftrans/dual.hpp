#pragma once

#include <cmath>
#include <ostream>

namespace ftrans::leaf {

// Forward-mode dual number: value and derivative with respect to one active
// parameter. Comparisons look at the value only.
struct Dual {
  double value = 0.0;
  double deriv = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : value(v) {}  // NOLINT: constants carry deriv 0
  constexpr Dual(double v, double d) : value(v), deriv(d) {}

  static constexpr Dual variable(double v) { return {v, 1.0}; }

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) {
    return {a.value + b.value, a.deriv + b.deriv};
  }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) {
    return {a.value - b.value, a.deriv - b.deriv};
  }
  friend constexpr Dual operator-(const Dual& a) { return {-a.value, -a.deriv}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.value * b.deriv + b.value * a.deriv};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    return {a.value / b.value, (a.deriv * b.value - a.value * b.deriv) / (b.value * b.value)};
  }

  friend constexpr bool operator<(const Dual& a, const Dual& b) { return a.value < b.value; }
  friend constexpr bool operator>(const Dual& a, const Dual& b) { return a.value > b.value; }
  friend constexpr bool operator<=(const Dual& a, const Dual& b) { return a.value <= b.value; }
  friend constexpr bool operator>=(const Dual& a, const Dual& b) { return a.value >= b.value; }
  friend constexpr bool operator==(const Dual& a, const Dual& b) { return a.value == b.value; }
  friend constexpr bool operator!=(const Dual& a, const Dual& b) { return a.value != b.value; }

  friend std::ostream& operator<<(std::ostream& os, const Dual& d) {
    return os << "(" << d.value << ", " << d.deriv << ")";
  }
};

inline Dual sqrt(const Dual& a) {
  double s = std::sqrt(a.value);
  return {s, a.deriv / (2.0 * s)};
}
inline Dual abs(const Dual& a) { return a.value < 0 ? -a : a; }
inline Dual exp(const Dual& a) {
  double e = std::exp(a.value);
  return {e, e * a.deriv};
}
inline Dual log(const Dual& a) { return {std::log(a.value), a.deriv / a.value}; }
inline Dual sin(const Dual& a) { return {std::sin(a.value), std::cos(a.value) * a.deriv}; }
inline Dual cos(const Dual& a) { return {std::cos(a.value), -std::sin(a.value) * a.deriv}; }
inline Dual acos(const Dual& a) {
  return {std::acos(a.value), -a.deriv / std::sqrt(1.0 - a.value * a.value)};
}
// Hard min/max: the derivative follows the selected branch (ties pick `a`).
inline Dual min(const Dual& a, const Dual& b) { return b.value < a.value ? b : a; }
inline Dual max(const Dual& a, const Dual& b) { return b.value > a.value ? b : a; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value; }

}  // namespace ftrans::leaf
