#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdint>
#include <string>

#include "rieszlab/errors.hpp"

namespace rieszlab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational &r) { return r.convert_to<double>(); }
inline double to_double(const BigInt &n) { return n.convert_to<double>(); }

inline BigInt bigint_pow(const BigInt &base, unsigned exp) {
  return boost::multiprecision::pow(base, exp);
}

/// n mod m reduced into [0, m); m > 0.
inline BigInt floor_mod(const BigInt &n, const BigInt &m) {
  BigInt r = n % m;
  if (r < 0) r += m;
  return r;
}

inline std::uint64_t floor_mod_u64(const BigInt &n, std::uint64_t m) {
  return floor_mod(n, BigInt(m)).convert_to<std::uint64_t>();
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline BigInt abs_big(const BigInt &n) { return n < 0 ? BigInt(-n) : n; }

/// Complex number with exact rational real/imaginary parts.
struct RationalComplex {
  Rational re{0};
  Rational im{0};

  RationalComplex() = default;
  RationalComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
  explicit RationalComplex(Rational r) : re(std::move(r)) {}
  static RationalComplex one() { return RationalComplex(Rational(1)); }

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }
  RationalComplex conj() const { return {re, -im}; }
  Rational abs2() const { return re * re + im * im; }
  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }

  RationalComplex &operator+=(const RationalComplex &o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  friend RationalComplex operator+(RationalComplex a, const RationalComplex &b) { return a += b; }
  friend RationalComplex operator-(const RationalComplex &a, const RationalComplex &b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend RationalComplex operator*(const RationalComplex &a, const RationalComplex &b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend RationalComplex operator*(const Rational &s, const RationalComplex &a) {
    return {s * a.re, s * a.im};
  }
  friend bool operator==(const RationalComplex &a, const RationalComplex &b) {
    return a.re == b.re && a.im == b.im;
  }
};

/// Parses "a/b" or "a" (decimal, optional sign) into an exact rational.
inline Rational parse_rational(const std::string &text) {
  try {
    auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(BigInt(text));
    BigInt num(text.substr(0, slash));
    BigInt den(text.substr(slash + 1));
    if (den == 0) throw ValidationError("rational with zero denominator: " + text);
    return Rational(num, den);
  } catch (const std::runtime_error &) {
    throw ValidationError("cannot parse rational: '" + text + "'");
  }
}

inline std::string to_string(const Rational &r) { return r.str(); }
inline std::string to_string(const BigInt &n) { return n.str(); }

}  // namespace rieszlab
