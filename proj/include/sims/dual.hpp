#pragma once

#include <cmath>

namespace sims {

// First-order forward-mode dual number with a single derivative slot.
// The geometry builders are templated on the scalar type; running them with
// Dual seeded on one design parameter yields the exact derivative of every
// control-point coordinate with respect to that parameter.  Construction is
// cheap, so a full geometry Jacobian is obtained by one pass per parameter.
struct Dual {
  double v = 0.0; // value
  double d = 0.0; // derivative w.r.t. the seeded parameter

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.d - a.v * b.d * inv) * inv};
}

inline Dual &operator+=(Dual &a, Dual b) { a = a + b; return a; }
inline Dual &operator-=(Dual &a, Dual b) { a = a - b; return a; }
inline Dual &operator*=(Dual &a, Dual b) { a = a * b; return a; }
inline Dual &operator/=(Dual &a, Dual b) { a = a / b; return a; }

inline bool operator<(Dual a, Dual b) { return a.v < b.v; }
inline bool operator>(Dual a, Dual b) { return a.v > b.v; }
inline bool operator<=(Dual a, Dual b) { return a.v <= b.v; }
inline bool operator>=(Dual a, Dual b) { return a.v >= b.v; }

inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, 0.5 * a.d / s};
}

// Uniform accessors so templated code can read values/derivatives from both
// plain doubles and duals.
inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }
inline double deriv_of(double) { return 0.0; }
inline double deriv_of(Dual x) { return x.d; }

} // namespace sims
