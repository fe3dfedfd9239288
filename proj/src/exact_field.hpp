#pragma once

// Field adapters for exact elimination.

#include <cmath>
#include <cstdint>

#include <boost/multiprecision/gmp.hpp>

namespace sparsetomo::detail {

using Rational = boost::multiprecision::mpq_rational;

/// Exact conversion of a finite double to a rational.
inline Rational to_rational(double v) {
  int exp = 0;
  const double mant = std::frexp(v, &exp);
  // 53 significant bits
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational r(scaled);
  exp -= 53;
  boost::multiprecision::mpz_int pow2 = 1;
  pow2 <<= static_cast<unsigned>(std::abs(exp));
  if (exp >= 0) {
    r *= Rational(pow2);
  } else {
    r /= Rational(pow2);
  }
  return r;
}

struct PrimeField {
  static constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;
  static constexpr std::uint64_t kSecondPrime = 4'611'686'018'427'387'847ull;  // 2^62 - 57

  using Value = std::uint64_t;
  std::uint64_t p;

  Value zero() const { return 0; }
  Value one() const { return 1; }
  bool is_zero(Value v) const { return v == 0; }
  Value from_weight(double w) const {
    const auto iw = static_cast<long long>(w);
    return iw >= 0 ? static_cast<Value>(iw) % p : p - (static_cast<Value>(-iw) % p);
  }
  Value mul(Value a, Value b) const {
    return static_cast<Value>((static_cast<unsigned __int128>(a) * b) % p);
  }
  Value sub(Value a, Value b) const { return a >= b ? a - b : a + (p - b); }
  Value inverse(Value a) const {
    Value result = 1, base = a, e = p - 2;
    while (e) {
      if (e & 1) result = mul(result, base);
      base = mul(base, base);
      e >>= 1;
    }
    return result;
  }
};

struct RationalField {
  using Value = Rational;
  Value zero() const { return Value(0); }
  Value one() const { return Value(1); }
  bool is_zero(const Value& v) const { return v == 0; }
  Value from_weight(double w) const { return to_rational(w); }
  Value mul(const Value& a, const Value& b) const { return a * b; }
  Value sub(const Value& a, const Value& b) const { return a - b; }
  Value inverse(const Value& a) const { return Value(1) / a; }
};

}  // namespace sparsetomo::detail
