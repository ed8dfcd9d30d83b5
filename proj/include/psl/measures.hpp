#pragma once

// Parameter samplers and continued-fraction machinery.
//
// The sets the metric theorems quantify over are sampled with simple
// surrogate distributions: uniform dyadic rationals for Lebesgue measure,
// i.i.d. uniform partial quotients in {1..M} for F_M, and a growth rule on
// partial quotients for W(v). None of these is the Kaufman measure.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "psl/arith.hpp"

namespace psl {

// ---------------------------------------------------------------------------
// Counter-based randomness: every draw is a pure function of (key, index), so
// extending a digit sequence later reproduces the same digits.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

inline std::uint64_t counter_word(std::uint64_t key, std::uint64_t index, std::uint64_t attempt = 0) {
  return splitmix64(key ^ splitmix64(index * 0xD1B54A32D192ED03ULL + attempt));
}

/// Unbiased draw from {0..bound-1}.
inline std::uint64_t uniform_below(std::uint64_t key, std::uint64_t index, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below requires bound >= 1");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::uint64_t w = counter_word(key, index, attempt);
    if (w < limit) return w % bound;
  }
}

inline BigInt random_bits(std::uint64_t key, std::size_t bits) {
  BigInt out = 0;
  std::size_t words = (bits + 63) / 64;
  for (std::size_t i = 0; i < words; ++i) {
    out <<= 64;
    std::uint64_t w = counter_word(key, i);
    out += BigInt(static_cast<unsigned long>(w));
  }
  mpz_fdiv_r_2exp(out.get_mpz_t(), out.get_mpz_t(), bits);
  return out;
}

// ---------------------------------------------------------------------------
// Sampler specifications

struct LebesgueSpec {
  unsigned bits = 64;
};

struct BoundedCFSpec {
  std::uint64_t M = 2;
  std::size_t depth = 32;
};

struct LiouvilleSpec {
  ExactRational v = 3;
  std::size_t depth = 8;
  std::uint64_t max_offset = 9;
};

struct SamplerSpec {
  std::variant<LebesgueSpec, BoundedCFSpec, LiouvilleSpec> kind;
  std::uint64_t seed = 0;
};

inline void validate(const SamplerSpec& spec) {
  if (auto* b = std::get_if<BoundedCFSpec>(&spec.kind)) {
    if (b->M < 1) throw std::invalid_argument("bounded-cf requires M >= 1");
    if (b->depth < 1) throw std::invalid_argument("bounded-cf requires depth >= 1");
  }
  if (auto* l = std::get_if<LiouvilleSpec>(&spec.kind)) {
    if (l->v < 2) throw std::invalid_argument("liouville requires v >= 2");
    if (l->depth < 1) throw std::invalid_argument("liouville requires depth >= 1");
  }
  if (auto* g = std::get_if<LebesgueSpec>(&spec.kind); g && g->bits < 1)
    throw std::invalid_argument("lebesgue requires bits >= 1");
}

/// Parses `lebesgue:bits | bounded-cf:M:depth | liouville:v:depth`.
inline SamplerSpec parse_sampler(std::string_view text, std::uint64_t seed = 0) {
  auto parts = detail::split(text, ':');
  SamplerSpec spec;
  spec.seed = seed;
  auto as_u64 = [](std::string_view s, const char* what) {
    auto v = detail::parse_int(s, what);
    if (v < 0) throw std::invalid_argument(std::string(what) + " must be nonnegative");
    return static_cast<std::uint64_t>(v);
  };
  if (parts[0] == "lebesgue" && parts.size() == 2) {
    spec.kind = LebesgueSpec{static_cast<unsigned>(as_u64(parts[1], "lebesgue bits"))};
  } else if (parts[0] == "bounded-cf" && parts.size() == 3) {
    spec.kind = BoundedCFSpec{as_u64(parts[1], "bounded-cf M"), as_u64(parts[2], "bounded-cf depth")};
  } else if (parts[0] == "liouville" && parts.size() == 3) {
    LiouvilleSpec l;
    l.v = parse_rational(parts[1]);
    l.depth = as_u64(parts[2], "liouville depth");
    spec.kind = l;
  } else {
    throw std::invalid_argument("unknown sampler '" + std::string(text) + "'");
  }
  validate(spec);
  return spec;
}

inline std::string to_string(const SamplerSpec& spec) {
  struct Visitor {
    std::string operator()(const LebesgueSpec& s) const { return "lebesgue:" + std::to_string(s.bits); }
    std::string operator()(const BoundedCFSpec& s) const {
      return "bounded-cf:" + std::to_string(s.M) + ":" + std::to_string(s.depth);
    }
    std::string operator()(const LiouvilleSpec& s) const {
      return "liouville:" + psl::to_string(s.v) + ":" + std::to_string(s.depth);
    }
  };
  return std::visit(Visitor{}, spec.kind);
}

// ---------------------------------------------------------------------------
// Continued fractions

class ContinuedFraction;

namespace detail {

/// ceil(q^e) for rational e >= 0.
inline BigInt ceil_rational_power(const BigInt& q, const ExactRational& e) {
  if (e == 0) return 1;
  unsigned long num = mpz_get_ui(e.get_num_mpz_t());
  unsigned long den = mpz_get_ui(e.get_den_mpz_t());
  BigInt powered = pow_ui(q, num);
  BigInt root;
  int exact = mpz_root(root.get_mpz_t(), powered.get_mpz_t(), den);
  return exact ? root : BigInt(root + 1);
}

}  // namespace detail

/// Simple continued fraction [a0; a1, a2, ...] with cached convergents. A
/// fraction carrying a digit rule is infinite (irrational) and extends on
/// demand; one without a rule is the finite expansion of a rational.
class ContinuedFraction {
 public:
  using DigitRule = std::variant<BoundedCFSpec, LiouvilleSpec>;

  explicit ContinuedFraction(std::vector<BigInt> digits, std::optional<DigitRule> rule = std::nullopt,
                             std::uint64_t seed = 0)
      : rule_(std::move(rule)), seed_(seed) {
    if (digits.empty()) throw std::invalid_argument("continued fraction needs at least one digit");
    for (auto& d : digits) push(std::move(d));
  }

  std::size_t size() const { return digits_.size(); }
  const BigInt& digit(std::size_t k) const { return digits_.at(k); }
  const BigInt& p(std::size_t k) const { return p_.at(k); }
  const BigInt& q(std::size_t k) const { return q_.at(k); }
  const std::vector<BigInt>& digits() const { return digits_; }
  ExactRational convergent(std::size_t k) const { return make_rational(p(k), q(k)); }
  bool extendable() const { return rule_.has_value(); }
  const std::optional<DigitRule>& rule() const { return rule_; }
  std::uint64_t seed() const { return seed_; }

  /// Appends the next digit produced by the rule.
  void extend() {
    if (!rule_) throw std::logic_error("finite continued fraction cannot be extended");
    std::size_t k = digits_.size();  // index of the new digit
    push(next_digit(k));
  }

  void ensure(std::size_t count) {
    while (size() < count) extend();
  }

 private:
  BigInt next_digit(std::size_t k) const {
    if (auto* b = std::get_if<BoundedCFSpec>(&*rule_)) {
      std::uint64_t key = derive_key(seed_, 0xBCF);
      return BigInt(static_cast<unsigned long>(1 + uniform_below(key, k, b->M)));
    }
    const auto& l = std::get<LiouvilleSpec>(*rule_);
    std::uint64_t key = derive_key(seed_, 0x11A);
    BigInt offset(static_cast<unsigned long>(uniform_below(key, k, l.max_offset + 1)));
    if (k == 1) return 1 + offset;
    // a_{k} >= q_{k-1}^{v-2} forces |x - p_{k-1}/q_{k-1}| < q_{k-1}^{-v}
    return detail::ceil_rational_power(q_[k - 1], l.v - 2) + offset;
  }

  void push(BigInt d) {
    if (!digits_.empty() && d < 1) throw std::invalid_argument("partial quotients must be >= 1");
    std::size_t k = digits_.size();
    const BigInt p1 = k >= 1 ? p_[k - 1] : BigInt(1), p2 = k >= 2 ? p_[k - 2] : BigInt(k == 1 ? 1 : 0);
    const BigInt q1 = k >= 1 ? q_[k - 1] : BigInt(0), q2 = k >= 2 ? q_[k - 2] : BigInt(k == 1 ? 0 : 1);
    p_.push_back(d * p1 + p2);
    q_.push_back(d * q1 + q2);
    digits_.push_back(std::move(d));
  }

  std::vector<BigInt> digits_, p_, q_;
  std::optional<DigitRule> rule_;
  std::uint64_t seed_;
};

using RealParameter = std::variant<ExactRational, ContinuedFraction>;

inline bool is_rational(const RealParameter& x) {
  return std::holds_alternative<ExactRational>(x) || !std::get<ContinuedFraction>(x).extendable();
}

/// Canonical simple continued fraction of r >= 0 (last digit >= 2 when length > 1).
inline std::vector<BigInt> cf_digits(const ExactRational& r) {
  if (r < 0) throw std::domain_error("cf_digits requires r >= 0");
  std::vector<BigInt> out;
  BigInt a = r.get_num(), b = r.get_den();
  while (b != 0) {
    BigInt q, rem;
    mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    out.push_back(q);
    a = b;
    b = rem;
  }
  return out;
}

inline std::string to_string(const RealParameter& x, std::size_t max_digits = 12) {
  if (auto* r = std::get_if<ExactRational>(&x)) return to_string(*r);
  const auto& cf = std::get<ContinuedFraction>(x);
  std::string s = "cf[" + cf.digit(0).get_str() + ";";
  for (std::size_t k = 1; k < cf.size() && k <= max_digits; ++k) s += (k > 1 ? "," : "") + cf.digit(k).get_str();
  if (cf.size() > max_digits + 1 || cf.extendable()) s += ",...";
  return s + "]";
}

/// Enclosing interval of width <= 2^-bits, extending digits as needed.
inline RationalInterval refine(RealParameter& x, std::size_t bits) {
  if (auto* r = std::get_if<ExactRational>(&x)) return {*r, *r};
  auto& cf = std::get<ContinuedFraction>(x);
  BigInt target = pow2(bits);
  for (std::size_t k = 0;; ++k) {
    if (k + 1 >= cf.size()) {
      if (!cf.extendable()) {
        ExactRational v = cf.convergent(cf.size() - 1);
        return {v, v};
      }
      cf.extend();
    }
    if (cf.q(k) * cf.q(k + 1) >= target) {
      ExactRational a = cf.convergent(k), b = cf.convergent(k + 1);
      return a < b ? RationalInterval{a, b} : RationalInterval{b, a};
    }
  }
}

/// Rational upper bound on x; cheap (uses a0 + 1 for infinite expansions).
inline ExactRational upper_bound(const RealParameter& x) {
  if (auto* r = std::get_if<ExactRational>(&x)) return *r;
  const auto& cf = std::get<ContinuedFraction>(x);
  if (!cf.extendable()) return cf.convergent(cf.size() - 1);
  return ExactRational(cf.digit(0) + 1);
}

/// Exact floor(P * x).
inline BigInt floor_mul(const BigInt& P, RealParameter& x) {
  if (auto* r = std::get_if<ExactRational>(&x)) {
    BigInt out;
    BigInt num = P * r->get_num();
    mpz_fdiv_q(out.get_mpz_t(), num.get_mpz_t(), r->get_den_mpz_t());
    return out;
  }
  if (is_rational(x)) {
    RealParameter exact = std::get<ContinuedFraction>(x).convergent(std::get<ContinuedFraction>(x).size() - 1);
    return floor_mul(P, exact);
  }
  if (P == 0) return 0;
  // x is irrational and strictly inside every convergent bracket.
  for (std::size_t bits = bit_length(P) + 16;; bits += 64) {
    RationalInterval iv = refine(x, bits);
    ExactRational lo = ExactRational(P) * iv.lo, hi = ExactRational(P) * iv.hi;
    BigInt fl = floor_of(lo), ch = ceil_of(hi);
    if (ch - fl == 1) return fl;
  }
}

/// Draws one parameter; deterministic in spec (including seed).
inline RealParameter sample(const SamplerSpec& spec) {
  validate(spec);
  if (auto* g = std::get_if<LebesgueSpec>(&spec.kind)) {
    BigInt m = random_bits(derive_key(spec.seed, 0x1EB), g->bits);
    return make_rational(m, pow2(g->bits));
  }
  std::size_t depth = 0;
  ContinuedFraction::DigitRule rule;
  if (auto* b = std::get_if<BoundedCFSpec>(&spec.kind)) {
    depth = b->depth;
    rule = *b;
  } else {
    const auto& l = std::get<LiouvilleSpec>(spec.kind);
    depth = l.depth;
    rule = l;
  }
  ContinuedFraction cf({BigInt(0)}, rule, spec.seed);
  cf.ensure(depth + 1);
  return cf;
}

}  // namespace psl
