#pragma once

// Exact partial sums of the perturbed series
//   sum_{n=1}^{T} sign_n [D_{n-1} c_n x] / D_n
// where D_n = d_1 ... d_n is the family's denominator product.
//
// For rational x = p/r the floor splits as
//   [D_{n-1} c_n p / r] = (D_{n-1} c_n p - rho_n) / r,   rho_n = D_{n-1} c_n p mod r,
// so the partial sum is x * U - V / r with U = sum sign_n c_n / d_n (the
// classical series) and V = sum sign_n rho_n / D_n. Both sums have small
// leaves and are formed by binary splitting.

#include <cmath>
#include <vector>

#include "psl/family.hpp"
#include "psl/measures.hpp"

namespace psl {

struct PartialSum {
  SeriesFamily family;
  RealParameter x;
  unsigned long terms_used = 0;
  ExactRational value;
  ExactRational tail_bound;
};

struct SeriesOptions {
  /// Upper limit on log2 of the running denominator product D_T.
  double max_denominator_bits = static_cast<double>(1ULL << 27);
};

namespace detail {

inline unsigned long floor_log2(unsigned long n) { return 63UL - static_cast<unsigned long>(__builtin_clzl(n)); }

struct SeriesTerm {
  int sign;
  BigInt c;
  BigInt d;  // step factor d_n = D_n / D_{n-1}
};

/// Generates (sign_n, c_n, d_n) for n = 1, 2, ... for the non-combined families.
class SeriesTermStream {
 public:
  explicit SeriesTermStream(const SeriesFamily& family) : family_(family) {}

  SeriesTerm next() {
    ++n_;
    SeriesTerm t{1, 1, 0};
    if (auto* z = std::get_if<Zeta>(&family_)) {
      t.d = pow_ui(BigInt(n_), static_cast<unsigned long>(z->k));
    } else if (std::holds_alternative<EulerLog>(family_)) {
      t.sign = n_ % 2 ? -1 : 1;
      t.c = BigInt(floor_log2(n_));
      t.d = BigInt(n_);
    } else if (std::holds_alternative<Sophomore>(family_)) {
      t.d = pow_ui(BigInt(n_), n_);
    } else if (std::holds_alternative<Erdos>(family_)) {
      factorial_ *= n_;
      t.d = factorial_ + 1;
    } else {
      throw std::invalid_argument("no single-series term stream for lincomb");
    }
    return t;
  }

 private:
  SeriesFamily family_;
  unsigned long n_ = 0;
  BigInt factorial_ = 1;
};

/// log2 of D_T, estimated.
inline double denominator_bits(const SeriesFamily& family, unsigned long T) {
  const double ln2 = std::log(2.0);
  double t = static_cast<double>(T);
  if (auto* z = std::get_if<Zeta>(&family)) return z->k * std::lgamma(t + 1) / ln2;
  if (std::holds_alternative<EulerLog>(family)) return std::lgamma(t + 1) / ln2;
  if (auto* l = std::get_if<LinComb>(&family)) return l->K * std::lgamma(t + 1) / ln2;
  double total = 0;
  for (unsigned long n = 1; n <= T; ++n) {
    double nn = static_cast<double>(n);
    total += std::holds_alternative<Sophomore>(family) ? nn * std::log2(nn) : std::lgamma(nn + 1) / ln2 + 1;
  }
  return total;
}

inline ExactRational unperturbed_tail(const SeriesFamily& family, unsigned long T) {
  BigInt t1(T + 1);
  if (auto* z = std::get_if<Zeta>(&family))
    return ExactRational(1) / ExactRational(pow_ui(BigInt(T), static_cast<unsigned long>(z->k - 1)) * (z->k - 1));
  if (std::holds_alternative<EulerLog>(family))
    return ExactRational(2 * (floor_log2(T + 1) + 1), 1) / ExactRational(t1);
  if (std::holds_alternative<Sophomore>(family)) return ExactRational(2) / ExactRational(pow_ui(t1, T + 1));
  BigInt fact = 1;
  for (unsigned long j = 2; j <= T + 1; ++j) fact *= j;
  return ExactRational(2) / ExactRational(fact + 1);
}

}  // namespace detail

/// Partial sum of the first `terms` perturbed terms at x >= 0, with a
/// certified bound on the discarded tail.
inline PartialSum eval_perturbed(const SeriesFamily& family, RealParameter x, unsigned long terms,
                                 const SeriesOptions& options = {}) {
  validate(family);
  if (std::holds_alternative<LinComb>(family))
    throw std::invalid_argument("eval_perturbed: lincomb is not a single series");
  if (terms < 1) throw std::invalid_argument("eval_perturbed requires terms >= 1");
  double bits = detail::denominator_bits(family, terms);
  if (bits > options.max_denominator_bits)
    throw BudgetExceeded("eval_perturbed: denominator of about " + std::to_string(static_cast<long long>(bits)) +
                         " bits exceeds the budget");

  // Collect the term data once.
  std::vector<detail::SeriesTerm> stream;
  stream.reserve(terms);
  detail::SeriesTermStream gen(family);
  for (unsigned long n = 1; n <= terms; ++n) stream.push_back(gen.next());

  // Rational stand-in for x whose floors agree with those of x for every term.
  ExactRational xr, x_hi;
  if (auto* r = std::get_if<ExactRational>(&x)) {
    xr = x_hi = *r;
  } else if (is_rational(x)) {
    xr = x_hi = upper_bound(x);
  }
  const bool irrational = !is_rational(x);
  if (!irrational && xr < 0) throw std::invalid_argument("eval_perturbed: negative x is not supported");

  BigInt max_c = 1;
  for (const auto& t : stream)
    if (t.c > max_c) max_c = t.c;
  std::size_t refine_bits = static_cast<std::size_t>(bits) + bit_length(max_c) + 64;

  while (true) {
    ExactRational delta = 0;
    if (irrational) {
      RationalInterval iv = refine(x, refine_bits);
      if (iv.lo < 0) throw std::invalid_argument("eval_perturbed: negative x is not supported");
      xr = iv.lo;
      x_hi = iv.hi;
      delta = iv.width();
    }
    const BigInt& p = xr.get_num();
    const BigInt& r = xr.get_den();

    // residues rho_n and the floor-stability check for irrational x
    std::vector<BigInt> rho(terms), steps(terms);
    BigInt prefix_mod = 1 % r;  // D_{n-1} mod r
    BigInt slack_limit = 0;
    if (irrational) slack_limit = ceil_of(ExactRational(pow2(static_cast<std::size_t>(bits) + 1) * max_c * r) * delta);
    bool stable = true;
    for (unsigned long i = 0; i < terms && stable; ++i) {
      const auto& t = stream[i];
      BigInt v = prefix_mod * t.c * p;
      rho[i] = mod_floor(v, r);
      if (t.sign < 0) rho[i] = -rho[i];
      steps[i] = t.d;
      prefix_mod = mod_floor(prefix_mod * t.d, r);
      // floor(P lo) == floor(P hi) iff r - rho > P r (hi - lo)
      if (irrational && r - abs(rho[i]) <= slack_limit) stable = false;
    }
    if (!stable) {
      refine_bits += 64;
      continue;
    }

    std::vector<ExactRational> classical;
    classical.reserve(terms);
    for (const auto& t : stream) {
      ExactRational q = make_rational(t.c, t.d);
      classical.push_back(t.sign < 0 ? ExactRational(-q) : q);
    }
    ExactRational U = sum_fractions(classical);
    ExactRational value = xr * U;
    if (r != 1) {
      HornerPair V = horner_sum(rho, steps);
      value -= make_rational(V.num, V.den * r);
    }

    PartialSum out{family, std::move(x), terms, value, 0};
    if (x_hi != 0) {
      out.tail_bound = x_hi * detail::unperturbed_tail(family, terms);
      bool integral_x = !irrational && r == 1;
      if (std::holds_alternative<EulerLog>(family) && !integral_x) {
        // floor residues break the alternation; they contribute < sum_{n>T} 1/n!
        BigInt fact = 1;
        for (unsigned long j = 2; j <= terms + 1; ++j) fact *= j;
        out.tail_bound += ExactRational(2) / ExactRational(fact);
      }
    }
    return out;
  }
}

}  // namespace psl
