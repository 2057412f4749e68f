#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "agnostic/errors.hpp"

namespace agnostic {

// Probabilities, masses and errors are carried as arbitrary-precision
// rationals so that acceptance checks compare exact quantities.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational make_rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw PreconditionError("rational with zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

inline std::string to_string(const Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Small fixed fraction used for thresholds (11/243 and friends) and config
// values. Kept in lowest terms with a positive denominator so comparisons
// against integer vote weights stay in 128-bit integer arithmetic.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Ratio() = default;
  constexpr Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw PreconditionError("ratio with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  Rational to_rational() const { return make_rational(num, den); }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend constexpr bool operator==(const Ratio& a, const Ratio& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend constexpr bool operator<(const Ratio& a, const Ratio& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend constexpr bool operator<=(const Ratio& a, const Ratio& b) { return !(b < a); }
  friend constexpr bool operator>(const Ratio& a, const Ratio& b) { return b < a; }
  friend constexpr bool operator>=(const Ratio& a, const Ratio& b) { return !(a < b); }

  friend std::ostream& operator<<(std::ostream& os, const Ratio& r) {
    return os << r.num << '/' << r.den;
  }
};

// part/total >= frac, exactly. total must be positive.
constexpr bool fraction_at_least(std::uint64_t part, std::uint64_t total, const Ratio& frac) {
  return static_cast<__int128>(part) * frac.den >= static_cast<__int128>(frac.num) * total;
}

}  // namespace agnostic
