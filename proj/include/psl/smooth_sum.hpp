#pragma once

// Certified summation of long smooth ranges.
//
// sum_{n=a}^{b} n^-s and sum_{n=a}^{b} (-1)^n floor(log2 n)/n are returned as
// rational enclosures (center, radius). Long ranges go through Euler-Maclaurin
// with the remainder bound
//   |R_p| <= 2 zeta(2p) / (2 pi)^{2p} * int_a^b |f^(2p)|
//        <= 4 (25/157)^{2p} |f^(2p-1)(a)|
// valid for completely monotone f (all summands used here are). Short ranges
// are summed exactly.

#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <vector>

#include "psl/arith.hpp"

namespace psl {

struct Enclosure {
  ExactRational center = 0;
  ExactRational radius = 0;

  Enclosure& operator+=(const Enclosure& o) {
    center += o.center;
    radius += o.radius;
    return *this;
  }
  Enclosure scaled(const ExactRational& m) const { return {center * m, radius * abs_of(m)}; }
  bool contains(const ExactRational& v) const { return abs_of(v - center) <= radius; }
};

/// Replaces the center by a multiple of 2^-prec and widens the radius to match.
inline Enclosure round_to_dyadic(const Enclosure& e, std::size_t prec) {
  BigInt scale = pow2(prec);
  BigInt fl = floor_of(e.center * ExactRational(scale));
  ExactRational c = make_rational(fl, scale);
  return {c, e.radius + (e.center - c)};
}

/// Number of bits b with 2^-b <= tol.
inline std::size_t bits_for(const ExactRational& tol) {
  if (tol <= 0) throw std::domain_error("tolerance must be positive");
  return bit_length(ceil_of(ExactRational(1) / tol));
}

/// Bernoulli number B_n with B_1 = -1/2.
inline ExactRational bernoulli(std::size_t n) {
  static std::mutex mutex;
  static std::deque<ExactRational> table{ExactRational(1)};
  std::lock_guard lock(mutex);
  while (table.size() <= n) {
    // sum_{j=0}^{m} C(m+1, j) B_j = 0
    std::size_t m = table.size();
    ExactRational acc = 0;
    BigInt binom = 1;  // C(m+1, 0)
    for (std::size_t j = 0; j < m; ++j) {
      if (j % 2 == 1 && j > 1) {
        // odd Bernoulli numbers beyond B_1 vanish
      } else {
        acc += ExactRational(binom) * table[j];
      }
      binom = binom * static_cast<unsigned long>(m + 1 - j) / static_cast<unsigned long>(j + 1);
    }
    table.push_back(-acc / ExactRational(static_cast<unsigned long>(m + 1)));
  }
  return table[n];
}

namespace detail {

constexpr std::size_t kDirectRange = 256;
constexpr unsigned kMaxEulerMaclaurinOrder = 160;

/// A completely monotone summand for Euler-Maclaurin.
struct SmoothSummand {
  std::function<ExactRational(const BigInt&)> value;
  /// |f^(r)(x)| for odd r; the sign of f^(r) is (-1)^r.
  std::function<ExactRational(unsigned, const BigInt&)> abs_derivative;
  std::function<Enclosure(const BigInt&, const BigInt&, const ExactRational&)> integral;
};

inline ExactRational two_pi_lower_ratio_pow(unsigned p) {
  // (25/157)^{2p} >= (1/(2 pi))^{2p} since 2 pi > 6.28
  return ExactRational(pow_ui(BigInt(25), 2 * p), pow_ui(BigInt(157), 2 * p));
}

/// Euler-Maclaurin over [a, b]; nullopt if no order up to the cap reaches tol.
inline std::optional<Enclosure> euler_maclaurin(const SmoothSummand& f, const BigInt& a, const BigInt& b,
                                                const ExactRational& tol) {
  unsigned order = 0;
  for (unsigned p = 1; p <= kMaxEulerMaclaurinOrder; ++p) {
    ExactRational bound = 4 * two_pi_lower_ratio_pow(p) * f.abs_derivative(2 * p - 1, a);
    if (bound <= tol / 2) {
      order = p;
      break;
    }
  }
  if (order == 0) return std::nullopt;

  Enclosure out = f.integral(a, b, tol / 4);
  out.center += (f.value(a) + f.value(b)) / 2;
  BigInt fact = 1;  // (2i)!
  for (unsigned i = 1; i <= order; ++i) {
    fact *= (2 * i - 1) * (2 * i);
    unsigned r = 2 * i - 1;
    // f^(r) = -|f^(r)| for odd r
    ExactRational diff = f.abs_derivative(r, a) - f.abs_derivative(r, b);
    out.center += bernoulli(2 * i) / ExactRational(fact) * diff;
  }
  out.radius += 4 * two_pi_lower_ratio_pow(order) * f.abs_derivative(2 * order - 1, a);
  return out;
}

/// Exact sum of f(n) over a short range.
inline ExactRational direct_sum(const std::function<ExactRational(const BigInt&)>& term, const BigInt& a,
                                const BigInt& b) {
  std::vector<ExactRational> terms;
  for (BigInt n = a; n <= b; ++n) terms.push_back(term(n));
  return sum_fractions(terms);
}

/// Sums f over [a, b]: exact for short ranges, otherwise Euler-Maclaurin,
/// peeling exact head chunks until the expansion converges.
inline Enclosure smooth_range_sum(const SmoothSummand& f, BigInt a, const BigInt& b, const ExactRational& tol) {
  Enclosure total;
  while (true) {
    if (b < a) return total;
    if (b - a < kDirectRange) {
      total.center += direct_sum(f.value, a, b);
      return total;
    }
    if (auto em = euler_maclaurin(f, a, b, tol)) {
      total += *em;
      return total;
    }
    BigInt mid = a * 2;
    if (mid > b) mid = b;
    total.center += direct_sum(f.value, a, mid - 1);
    a = mid;
  }
}

inline BigInt rising(unsigned long s, unsigned r) {
  BigInt out = 1;
  for (unsigned i = 0; i < r; ++i) out *= s + i;
  return out;
}

/// atanh(1/w) for integer w >= 2, as an enclosure of radius <= tol.
inline Enclosure atanh_inverse(const BigInt& w, const ExactRational& tol) {
  ExactRational z = ExactRational(1) / ExactRational(w);
  ExactRational z2 = z * z;
  ExactRational power = z;  // z^{2k+1}
  ExactRational partial = 0;
  for (unsigned long k = 0;; ++k) {
    partial += power / ExactRational(2 * k + 1);
    power *= z2;
    // remainder <= z^{2K+1} / ((2K+1)(1 - z^2))
    ExactRational rem = power / (ExactRational(2 * k + 3) * (ExactRational(1) - z2));
    if (rem <= 2 * tol) return {partial + rem / 2, rem / 2};
  }
}

}  // namespace detail

/// Enclosure of sum_{n=a}^{b} n^-s, s >= 2, 1 <= a.
inline Enclosure power_sum(unsigned s, const BigInt& a, const BigInt& b, const ExactRational& tol) {
  if (s < 2) throw std::invalid_argument("power_sum requires s >= 2");
  if (a < 1) throw std::invalid_argument("power_sum requires a >= 1");
  detail::SmoothSummand f;
  f.value = [s](const BigInt& x) -> ExactRational { return ExactRational(1) / ExactRational(pow_ui(x, s)); };
  f.abs_derivative = [s](unsigned r, const BigInt& x) -> ExactRational {
    return ExactRational(detail::rising(s, r)) / ExactRational(pow_ui(x, s + r));
  };
  f.integral = [s](const BigInt& lo, const BigInt& hi, const ExactRational&) -> Enclosure {
    ExactRational v = (ExactRational(1) / ExactRational(pow_ui(lo, s - 1)) -
                       ExactRational(1) / ExactRational(pow_ui(hi, s - 1))) /
                      ExactRational(static_cast<unsigned long>(s - 1));
    return Enclosure{v, 0};
  };
  Enclosure e = detail::smooth_range_sum(f, a, b, tol);
  return round_to_dyadic(e, bits_for(tol) + 8);
}

/// Enclosure of sum_{n=u}^{v} (-1)^n / n.
inline Enclosure alternating_harmonic_sum(BigInt u, BigInt v, const ExactRational& tol) {
  Enclosure out;
  if (v < u) return out;
  if (v - u < 2 * detail::kDirectRange) {
    out.center = detail::direct_sum(
        [](const BigInt& n) -> ExactRational {
          ExactRational t(1, 1);
          t /= ExactRational(n);
          return mpz_odd_p(n.get_mpz_t()) ? ExactRational(-t) : t;
        },
        u, v);
    return out;
  }
  if (mpz_odd_p(u.get_mpz_t())) {
    out.center -= ExactRational(1) / ExactRational(u);
    ++u;
  }
  if (mpz_even_p(v.get_mpz_t())) {
    out.center += ExactRational(1) / ExactRational(v);
    --v;
  }
  // pairs (2j, 2j+1): g(j) = 1/(2j) - 1/(2j+1)
  detail::SmoothSummand g;
  g.value = [](const BigInt& j) -> ExactRational {
    BigInt t = 2 * j;
    return ExactRational(1) / ExactRational(t * (t + 1));
  };
  g.abs_derivative = [](unsigned r, const BigInt& j) -> ExactRational {
    // |g^(r)(j)| = r! 2^r [(2j)^{-r-1} - (2j+1)^{-r-1}]
    BigInt fact = 1;
    for (unsigned i = 2; i <= r; ++i) fact *= i;
    BigInt t = 2 * j;
    ExactRational bracket = ExactRational(1) / ExactRational(pow_ui(t, r + 1)) -
                            ExactRational(1) / ExactRational(pow_ui(t + 1, r + 1));
    return ExactRational(fact * pow2(r)) * bracket;
  };
  g.integral = [](const BigInt& lo, const BigInt& hi, const ExactRational& itol) -> Enclosure {
    // int g = atanh(1/(4 lo + 1)) - atanh(1/(4 hi + 1))
    Enclosure left = detail::atanh_inverse(4 * lo + 1, itol / 2);
    Enclosure right = detail::atanh_inverse(4 * hi + 1, itol / 2);
    return Enclosure{left.center - right.center, left.radius + right.radius};
  };
  out += detail::smooth_range_sum(g, u / 2, (v - 1) / 2, tol);
  return out;
}

/// Enclosure of sum_{n=a}^{b} (-1)^n floor(log2 n) / n, a >= 1.
inline Enclosure alternating_log_sum(const BigInt& a, const BigInt& b, const ExactRational& tol) {
  if (a < 1) throw std::invalid_argument("alternating_log_sum requires a >= 1");
  Enclosure total;
  if (b < a) return total;
  std::size_t first = bit_length(a) - 1;
  std::size_t last = bit_length(b) - 1;
  std::size_t blocks = last - first + 1;
  std::size_t prec = bits_for(tol) + 8 + bit_length(BigInt(static_cast<unsigned long>(blocks)));
  for (std::size_t m = first; m <= last; ++m) {
    if (m == 0) continue;  // floor(log2 1) = 0
    BigInt u = pow2(m);
    BigInt v = pow2(m + 1) - 1;
    if (u < a) u = a;
    if (v > b) v = b;
    ExactRational block_tol = tol / ExactRational(static_cast<unsigned long>(m * blocks * 2));
    Enclosure e = alternating_harmonic_sum(u, v, block_tol).scaled(ExactRational(static_cast<unsigned long>(m)));
    total += round_to_dyadic(e, prec);
  }
  return total;
}

}  // namespace psl
