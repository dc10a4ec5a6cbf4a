#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace whirl {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Forward-mode dual number carrying a value and three partials (r, s, xi).
/// The scalar type is a template parameter so duals can nest: DualT<Dual3>
/// yields exact second partials when those are needed.
template <class T>
struct DualT {
  T v{};
  std::array<T, 3> d{T{}, T{}, T{}};

  DualT() = default;
  DualT(T value) : v(value) {}  // NOLINT: implicit from constants is intended
  DualT(T value, T dr, T ds, T dxi) : v(value), d{dr, ds, dxi} {}

  static DualT var(int slot, T value) {
    DualT x(value);
    x.d[slot] = T(1);
    return x;
  }
};

using Dual3 = DualT<double>;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const DualT<T>& x) {
  return value_of(x.v);
}

template <class T>
DualT<T> operator+(const DualT<T>& a, const DualT<T>& b) {
  return {a.v + b.v, a.d[0] + b.d[0], a.d[1] + b.d[1], a.d[2] + b.d[2]};
}
template <class T>
DualT<T> operator-(const DualT<T>& a, const DualT<T>& b) {
  return {a.v - b.v, a.d[0] - b.d[0], a.d[1] - b.d[1], a.d[2] - b.d[2]};
}
template <class T>
DualT<T> operator-(const DualT<T>& a) {
  return {-a.v, -a.d[0], -a.d[1], -a.d[2]};
}
template <class T>
DualT<T> operator*(const DualT<T>& a, const DualT<T>& b) {
  return {a.v * b.v, a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1],
          a.d[2] * b.v + a.v * b.d[2]};
}
template <class T>
DualT<T> operator/(const DualT<T>& a, const DualT<T>& b) {
  if (value_of(b.v) == 0.0) throw DomainError("division by zero");
  const T iv = T(1) / b.v;
  const T q = a.v * iv;
  return {q, (a.d[0] - q * b.d[0]) * iv, (a.d[1] - q * b.d[1]) * iv,
          (a.d[2] - q * b.d[2]) * iv};
}

namespace detail {
// chain rule: f(u) with derivative fp(u)
template <class T, class F, class Fp>
DualT<T> lift(const DualT<T>& a, F&& f, Fp&& fp) {
  const T s = fp(a.v);
  return {f(a.v), s * a.d[0], s * a.d[1], s * a.d[2]};
}
}  // namespace detail

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

template <class T>
DualT<T> exp(const DualT<T>& a) {
  return detail::lift(a, [](const T& x) { return exp(x); }, [](const T& x) { return exp(x); });
}
template <class T>
DualT<T> log(const DualT<T>& a) {
  if (value_of(a.v) <= 0.0) throw DomainError("log of non-positive value");
  return detail::lift(a, [](const T& x) { return log(x); }, [](const T& x) { return T(1) / x; });
}
template <class T>
DualT<T> sqrt(const DualT<T>& a) {
  if (value_of(a.v) < 0.0) throw DomainError("sqrt of negative value");
  if (value_of(a.v) == 0.0) throw DomainError("sqrt derivative at zero");
  return detail::lift(a, [](const T& x) { return sqrt(x); },
                      [](const T& x) { return T(0.5) / sqrt(x); });
}
template <class T>
DualT<T> sin(const DualT<T>& a) {
  return detail::lift(a, [](const T& x) { return sin(x); }, [](const T& x) { return cos(x); });
}
template <class T>
DualT<T> cos(const DualT<T>& a) {
  return detail::lift(a, [](const T& x) { return cos(x); }, [](const T& x) { return -sin(x); });
}

template <class T>
DualT<T> pow(const DualT<T>& a, const DualT<T>& b) {
  // constant integer exponents stay valid for a <= 0
  const double bv = value_of(b.v);
  const bool const_exp = value_of(b.d[0]) == 0 && value_of(b.d[1]) == 0 && value_of(b.d[2]) == 0;
  if (const_exp && bv == std::round(bv)) {
    const int k = static_cast<int>(std::round(bv));
    if (k == 0) return DualT<T>(T(1));
    DualT<T> r = a;
    for (int i = 1; i < std::abs(k); ++i) r = r * a;
    if (k < 0) return DualT<T>(T(1)) / r;
    return r;
  }
  if (value_of(a.v) <= 0.0) throw DomainError("pow with non-positive base");
  return exp(b * log(a));
}

template <class T>
DualT<T> pow(const DualT<T>& a, double c) {
  return pow(a, DualT<T>(T(c)));
}
template <class T>
DualT<T> pow(double c, const DualT<T>& a) {
  return pow(DualT<T>(T(c)), a);
}

// mixed scalar/dual arithmetic
template <class T>
DualT<T> operator+(const DualT<T>& a, double c) {
  return a + DualT<T>(T(c));
}
template <class T>
DualT<T> operator+(double c, const DualT<T>& a) {
  return DualT<T>(T(c)) + a;
}
template <class T>
DualT<T> operator-(const DualT<T>& a, double c) {
  return a - DualT<T>(T(c));
}
template <class T>
DualT<T> operator-(double c, const DualT<T>& a) {
  return DualT<T>(T(c)) - a;
}
template <class T>
DualT<T> operator*(const DualT<T>& a, double c) {
  return a * DualT<T>(T(c));
}
template <class T>
DualT<T> operator*(double c, const DualT<T>& a) {
  return DualT<T>(T(c)) * a;
}
template <class T>
DualT<T> operator/(const DualT<T>& a, double c) {
  return a / DualT<T>(T(c));
}
template <class T>
DualT<T> operator/(double c, const DualT<T>& a) {
  return DualT<T>(T(c)) / a;
}

}  // namespace whirl
