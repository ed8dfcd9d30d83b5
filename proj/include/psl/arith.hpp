#pragma once

// Exact and error-bounded arithmetic kernels.
//
// Unbounded integers and rationals are GMP's mpz/mpq classes; mpq values are
// kept canonical after every operation. ErrorBoundedUnit is a B-bit
// fixed-point number in [0,1) carrying a rigorous error radius counted in
// units of 2^-B.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "psl/family.hpp"

namespace psl {

using BigInt = mpz_class;
using ExactRational = mpq_class;

/// Raised when a computation would exceed a configured term or memory budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ExactRational make_rational(const BigInt& num, const BigInt& den) {
  if (den == 0) throw std::domain_error("zero denominator");
  ExactRational r(num, den);
  r.canonicalize();
  return r;
}

inline BigInt pow2(std::size_t bits) {
  BigInt r = 1;
  mpz_mul_2exp(r.get_mpz_t(), r.get_mpz_t(), bits);
  return r;
}

inline BigInt pow_ui(const BigInt& base, unsigned long exp) {
  BigInt r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), exp);
  return r;
}

inline std::size_t bit_length(const BigInt& v) {
  return v == 0 ? 0 : mpz_sizeinbase(v.get_mpz_t(), 2);
}

inline BigInt floor_of(const ExactRational& r) {
  BigInt q;
  mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

inline BigInt ceil_of(const ExactRational& r) {
  BigInt q;
  mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

/// Nonnegative remainder of a modulo m (m > 0).
inline BigInt mod_floor(const BigInt& a, const BigInt& m) {
  BigInt r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

/// r - floor(r), always in [0,1).
inline ExactRational frac_exact(const ExactRational& r) {
  BigInt rem;
  mpz_fdiv_r(rem.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  // gcd(rem, den) == gcd(num, den) == 1, so the result is already canonical.
  ExactRational out;
  mpz_set(out.get_num_mpz_t(), rem.get_mpz_t());
  mpz_set(out.get_den_mpz_t(), r.get_den_mpz_t());
  return out;
}

inline ExactRational abs_of(const ExactRational& r) { return r < 0 ? ExactRational(-r) : r; }

struct RationalInterval {
  ExactRational lo;
  ExactRational hi;

  ExactRational width() const { return hi - lo; }
  bool contains(const ExactRational& v) const { return lo <= v && v <= hi; }
};

// ---------------------------------------------------------------------------
// Text conversion

/// Parses "p/q", an integer, or a decimal literal with optional exponent.
inline ExactRational parse_rational(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("malformed rational '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt num, den;
    if (num.set_str(std::string(text.substr(0, slash)), 10) != 0) throw bad();
    if (den.set_str(std::string(text.substr(slash + 1)), 10) != 0) throw bad();
    if (den == 0) throw bad();
    return make_rational(num, den);
  }
  std::string mantissa(text);
  long exponent = 0;
  if (auto e = mantissa.find_first_of("eE"); e != std::string::npos) {
    try {
      std::size_t used = 0;
      exponent = std::stol(mantissa.substr(e + 1), &used);
      if (used != mantissa.size() - e - 1) throw bad();
    } catch (const std::logic_error&) {
      throw bad();
    }
    mantissa.resize(e);
  }
  std::string digits;
  bool negative = false;
  std::size_t i = 0;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    i = 1;
  }
  bool seen_point = false;
  for (; i < mantissa.size(); ++i) {
    char c = mantissa[i];
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits += c;
      if (seen_point) --exponent;
    } else {
      throw bad();
    }
  }
  if (digits.empty()) throw bad();
  BigInt num(digits, 10);
  if (negative) num = -num;
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  return exponent >= 0 ? ExactRational(num * scale) : make_rational(num, scale);
}

inline std::string to_string(const ExactRational& r) {
  return r.get_den() == 1 ? r.get_num().get_str() : r.get_str();
}

/// Decimal expansion truncated (toward zero) after `digits` fractional digits.
inline std::string to_decimal(const ExactRational& r, int digits = 40) {
  if (r < 0) return "-" + to_decimal(ExactRational(-r), digits);
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
  BigInt scaled = floor_of(r * ExactRational(scale));
  std::string s = scaled.get_str();
  if (digits == 0) return s;
  if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
  s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  return s;
}

/// Scientific notation rounded up (never below the true value); for radii.
inline std::string to_scientific_up(const ExactRational& r, int significant = 8) {
  if (r < 0) throw std::domain_error("to_scientific_up expects a nonnegative value");
  if (r == 0) return "0";
  long e = static_cast<long>(mpz_sizeinbase(r.get_num_mpz_t(), 10)) -
           static_cast<long>(mpz_sizeinbase(r.get_den_mpz_t(), 10));
  auto pow10 = [](long k) -> ExactRational {
    BigInt p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(k < 0 ? -k : k));
    return k >= 0 ? ExactRational(p) : ExactRational(1, 1) / ExactRational(p);
  };
  while (r < pow10(e)) --e;
  while (r >= pow10(e + 1)) ++e;
  BigInt mant = ceil_of(r / pow10(e - significant + 1));
  BigInt limit;
  mpz_ui_pow_ui(limit.get_mpz_t(), 10, static_cast<unsigned long>(significant));
  if (mant >= limit) {
    mant = limit / 10;
    ++e;
  }
  std::string m = mant.get_str();
  std::string out = m.substr(0, 1);
  if (m.size() > 1) out += "." + m.substr(1);
  out += "e" + std::string(e < 0 ? "-" : "+") + std::to_string(e < 0 ? -e : e);
  return out;
}

// ---------------------------------------------------------------------------
// ErrorBoundedUnit

class ErrorBoundedUnit {
 public:
  static constexpr unsigned kDefaultBits = 128;

  explicit ErrorBoundedUnit(unsigned bits = kDefaultBits) : bits_(bits) {}

  /// mantissa is reduced mod 2^bits; radius is clamped to 2^bits ulps (= 1).
  static ErrorBoundedUnit from_fixed(BigInt mantissa, unsigned bits, BigInt radius_ulps) {
    ErrorBoundedUnit u(bits);
    mpz_fdiv_r_2exp(u.mantissa_.get_mpz_t(), mantissa.get_mpz_t(), bits);
    if (radius_ulps < 0) throw std::domain_error("negative error radius");
    u.radius_ulps_ = std::move(radius_ulps);
    u.clamp();
    return u;
  }

  /// Fixed-point image of frac(r): floored to `bits`, radius 1 ulp iff inexact.
  static ErrorBoundedUnit from_rational(const ExactRational& r, unsigned bits = kDefaultBits) {
    ExactRational f = frac_exact(r);
    BigInt shifted;
    mpz_mul_2exp(shifted.get_mpz_t(), f.get_num_mpz_t(), bits);
    BigInt q, rem;
    mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), shifted.get_mpz_t(), f.get_den_mpz_t());
    return from_fixed(std::move(q), bits, BigInt(rem == 0 ? 0 : 1));
  }

  unsigned bits() const { return bits_; }
  const BigInt& mantissa() const { return mantissa_; }
  const BigInt& radius_ulps() const { return radius_ulps_; }

  ExactRational value() const { return make_rational(mantissa_, pow2(bits_)); }
  ExactRational error_radius() const { return make_rational(radius_ulps_, pow2(bits_)); }
  double to_double() const { return mpz_get_d(mantissa_.get_mpz_t()) / std::ldexp(1.0, static_cast<int>(bits_)); }

  /// An accumulated radius of 1/4 or more makes the value meaningless mod 1.
  bool uninformative() const { return radius_ulps_ >= pow2(bits_ - 2); }

  /// Adds `extra` to the radius, rounded up to whole ulps.
  void widen(const ExactRational& extra) {
    if (extra < 0) throw std::domain_error("negative radius increment");
    radius_ulps_ += ceil_of(extra * ExactRational(pow2(bits_)));
    clamp();
  }

  /// Addition modulo 1; radii add. Both operands must share the width.
  ErrorBoundedUnit& operator+=(const ErrorBoundedUnit& other) {
    if (other.bits_ != bits_) throw std::invalid_argument("ErrorBoundedUnit width mismatch");
    mantissa_ += other.mantissa_;
    mpz_fdiv_r_2exp(mantissa_.get_mpz_t(), mantissa_.get_mpz_t(), bits_);
    radius_ulps_ += other.radius_ulps_;
    clamp();
    return *this;
  }

 private:
  void clamp() {
    BigInt one = pow2(bits_);
    if (radius_ulps_ > one) radius_ulps_ = one;
  }

  unsigned bits_;
  BigInt mantissa_ = 0;
  BigInt radius_ulps_ = 0;
};

/// Fractional part of P*c/d as a `bits`-bit fixed-point value, computed from
/// the residue (P*c mod d) without forming the quotient.
inline ErrorBoundedUnit term_frac_mod(const BigInt& P, const BigInt& c, const BigInt& d,
                                      unsigned bits = ErrorBoundedUnit::kDefaultBits) {
  if (d < 1) throw std::domain_error("term_frac_mod requires d >= 1");
  BigInt rem;
  mpz_fdiv_r(rem.get_mpz_t(), P.get_mpz_t(), d.get_mpz_t());
  rem *= c;
  mpz_fdiv_r(rem.get_mpz_t(), rem.get_mpz_t(), d.get_mpz_t());
  mpz_mul_2exp(rem.get_mpz_t(), rem.get_mpz_t(), bits);
  BigInt q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), rem.get_mpz_t(), d.get_mpz_t());
  return ErrorBoundedUnit::from_fixed(std::move(q), bits, BigInt(r == 0 ? 0 : 1));
}

/// Mod-1 sum. Fixed-point addition at a common width is exact, so the radius
/// of the result is exactly the sum of the input radii. Check
/// `uninformative()` on the result before trusting it.
inline ErrorBoundedUnit sum_mod1(std::span<const ErrorBoundedUnit> terms) {
  if (terms.empty()) return ErrorBoundedUnit();
  ErrorBoundedUnit acc(terms.front().bits());
  for (const auto& t : terms) acc += t;
  return acc;
}

/// Interval containing ||v|| (distance to the nearest integer).
inline RationalInterval dist_to_int(const ErrorBoundedUnit& v) {
  ExactRational value = v.value();
  ExactRational one_minus = ExactRational(1) - value;
  ExactRational d = value < one_minus ? value : one_minus;
  ExactRational r = v.error_radius();
  ExactRational lo = d - r, hi = d + r;
  if (lo < 0) lo = 0;
  if (hi > ExactRational(1, 2)) hi = ExactRational(1, 2);
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Prefix products: the multipliers (N!)^k, N!, prod j^j, prod (j!+1).

class PrefixProduct {
 public:
  PrefixProduct(SeriesFamily family, unsigned long N) : family_(std::move(family)) {
    validate(family_);
    if (N < 1) throw std::invalid_argument("prefix_product requires N >= 1");
    while (N_ < N) extend();
  }

  const SeriesFamily& family() const { return family_; }
  unsigned long N() const { return N_; }
  const BigInt& value() const { return value_; }

  /// Multiplier that takes the product from N to N+1.
  BigInt step_factor() const { return step_factor_at(N_ + 1); }

  void extend() {
    value_ *= step_factor_at(N_ + 1);
    ++N_;
    factorial_ *= N_;
  }

 private:
  BigInt step_factor_at(unsigned long n) const {
    struct Visitor {
      unsigned long n;
      const BigInt& prev_factorial;
      BigInt operator()(const Zeta& z) const { return pow_ui(BigInt(n), static_cast<unsigned long>(z.k)); }
      BigInt operator()(const EulerLog&) const { return BigInt(n); }
      BigInt operator()(const Sophomore&) const { return pow_ui(BigInt(n), n); }
      BigInt operator()(const Erdos&) const { return prev_factorial * n + 1; }
      BigInt operator()(const LinComb& l) const { return pow_ui(BigInt(n), static_cast<unsigned long>(l.K)); }
    };
    return std::visit(Visitor{n, factorial_}, family_);
  }

  SeriesFamily family_;
  unsigned long N_ = 0;
  BigInt value_ = 1;
  BigInt factorial_ = 1;  // N!
};

inline PrefixProduct prefix_product(const SeriesFamily& family, unsigned long N) { return PrefixProduct(family, N); }

// ---------------------------------------------------------------------------
// Binary-splitting summation.

/// Exact sum of num[i]/den[i], combined pairwise so operand sizes stay balanced.
inline ExactRational sum_fractions(std::span<const ExactRational> terms) {
  if (terms.empty()) return 0;
  if (terms.size() == 1) return terms[0];
  auto mid = terms.size() / 2;
  return sum_fractions(terms.first(mid)) + sum_fractions(terms.subspan(mid));
}

/// Horner-form sum  sum_i a_i / (s_0 s_1 ... s_i)  as an unreduced pair
/// (numerator, prod s_i).
struct HornerPair {
  BigInt num;
  BigInt den;
};

inline HornerPair horner_sum(std::span<const BigInt> a, std::span<const BigInt> s) {
  if (a.size() != s.size()) throw std::invalid_argument("horner_sum: size mismatch");
  if (a.empty()) return {0, 1};
  if (a.size() == 1) return {a[0], s[0]};
  auto mid = a.size() / 2;
  HornerPair left = horner_sum(a.first(mid), s.first(mid));
  HornerPair right = horner_sum(a.subspan(mid), s.subspan(mid));
  return {left.num * right.den + right.num, left.den * right.den};
}

}  // namespace psl
