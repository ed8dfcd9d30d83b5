#pragma once

// Criterion sequences: frac(q x P_N sum_{n=N+1}^{T} sign_n c_n / d_n) for each
// family, with truncation schedules, certified tails, and the raw
// product-quotient form kept as a brute-force oracle.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "psl/arith.hpp"
#include "psl/family.hpp"
#include "psl/measures.hpp"
#include "psl/smooth_sum.hpp"

namespace psl {

// ---------------------------------------------------------------------------
// Truncation schedules

struct PaperExact {};
struct Capped {
  BigInt T_max;
};
struct ErrorTarget {
  ExactRational eps;
};

using TruncationSchedule = std::variant<PaperExact, Capped, ErrorTarget>;

/// Parses `paper | cap:T | error:EPS`.
inline TruncationSchedule parse_schedule(std::string_view text) {
  auto parts = detail::split(text, ':');
  if (parts[0] == "paper" && parts.size() == 1) return PaperExact{};
  if (parts[0] == "cap" && parts.size() == 2) {
    BigInt t;
    if (parts[1].empty() || t.set_str(std::string(parts[1]), 10) != 0 || t < 1)
      throw std::invalid_argument("cap:T requires a positive integer");
    return Capped{t};
  }
  if (parts[0] == "error" && parts.size() == 2) {
    ExactRational eps = parse_rational(parts[1]);
    if (eps <= 0) throw std::invalid_argument("error:EPS requires EPS > 0");
    return ErrorTarget{eps};
  }
  throw std::invalid_argument("unknown schedule '" + std::string(text) + "'");
}

inline std::string to_string(const TruncationSchedule& s) {
  if (std::holds_alternative<PaperExact>(s)) return "paper";
  if (auto* c = std::get_if<Capped>(&s)) return "cap:" + c->T_max.get_str();
  return "error:" + to_string(std::get<ErrorTarget>(s).eps);
}

// ---------------------------------------------------------------------------
// Points

enum class ComputeMode { Auto, Exact, FixedPoint };

struct CriterionOptions {
  unsigned bits = ErrorBoundedUnit::kDefaultBits;
  /// Cap on individually evaluated terms.
  std::uint64_t term_budget = 100'000'000;
  /// Terms summed one by one before a smooth tail is handed to Euler-Maclaurin.
  std::uint64_t direct_head = 512;
  /// Auto mode takes the exact-rational path below these sizes.
  std::uint64_t exact_max_terms = 4096;
  double exact_max_bits = static_cast<double>(1 << 24);
  ComputeMode mode = ComputeMode::Auto;
};

struct CriterionPoint {
  unsigned long N = 0;
  BigInt T_used;
  ErrorBoundedUnit frac;
  /// Certified bound on everything beyond T_used.
  ExactRational tail_err;
  bool exact = false;
  bool uninformative = false;
  std::optional<ExactRational> exact_value;
  std::uint64_t terms_evaluated = 0;

  ExactRational value() const { return exact_value ? *exact_value : frac.value(); }
  ExactRational radius() const { return exact_value ? ExactRational(0) : frac.error_radius(); }
  ExactRational error_total() const { return radius() + tail_err; }

  /// Enclosure of the distance to the nearest integer, tail included.
  RationalInterval dist() const {
    ExactRational v = value();
    ExactRational d = v < ExactRational(1) - v ? v : ExactRational(1) - v;
    ExactRational e = error_total();
    ExactRational lo = d - e, hi = d + e;
    if (lo < 0) lo = 0;
    if (hi > ExactRational(1, 2)) hi = ExactRational(1, 2);
    return {lo, hi};
  }
};

namespace detail {

enum class TermKind { Power, AltLog, Hyper, ErdosDen };

struct Component {
  TermKind kind;
  unsigned s = 0;
  BigInt coef = 1;
};

inline std::vector<Component> components(const SeriesFamily& family) {
  struct Visitor {
    std::vector<Component> operator()(const Zeta& z) const {
      return {{TermKind::Power, static_cast<unsigned>(z.k), 1}};
    }
    std::vector<Component> operator()(const EulerLog&) const { return {{TermKind::AltLog, 1, 1}}; }
    std::vector<Component> operator()(const Sophomore&) const { return {{TermKind::Hyper, 0, 1}}; }
    std::vector<Component> operator()(const Erdos&) const { return {{TermKind::ErdosDen, 0, 1}}; }
    std::vector<Component> operator()(const LinComb& l) const {
      std::vector<Component> out;
      if (l.coef(1) != 0) out.push_back({TermKind::AltLog, 1, BigInt(static_cast<long>(l.coef(1)))});
      for (int j = 2; j <= l.K; ++j)
        if (l.coef(j) != 0)
          out.push_back({TermKind::Power, static_cast<unsigned>(j), BigInt(static_cast<long>(l.coef(j)))});
      return out;
    }
  };
  return std::visit(Visitor{}, family);
}

struct Term {
  int sign = 1;
  unsigned long c = 1;
  BigInt d;
};

/// Term n of a component; `n_factorial` must hold n! for ErdosDen.
inline Term component_term(const Component& comp, unsigned long n, const BigInt& n_factorial) {
  Term t;
  switch (comp.kind) {
    case TermKind::Power:
      t.d = pow_ui(BigInt(n), comp.s);
      break;
    case TermKind::AltLog:
      t.sign = n % 2 ? -1 : 1;
      t.c = 63UL - static_cast<unsigned long>(__builtin_clzl(n));
      t.d = BigInt(n);
      break;
    case TermKind::Hyper:
      t.d = pow_ui(BigInt(n), n);
      break;
    case TermKind::ErdosDen:
      t.d = n_factorial + 1;
      break;
  }
  return t;
}

inline double log2_denominator(const Component& comp, double n) {
  switch (comp.kind) {
    case TermKind::Power: return comp.s * std::log2(n);
    case TermKind::AltLog: return std::log2(n);
    case TermKind::Hyper: return n * std::log2(n);
    case TermKind::ErdosDen: return std::lgamma(n + 1) / std::log(2.0) + 1;
  }
  return 0;
}

constexpr unsigned long kExactTailLimit = 4096;
constexpr double kCoarseTailBitsCap = 65536;

/// floor(log2 T) + 1 + (T - 2^m) / 2^m: a majorant of floor(log2 T) + 1 that
/// makes L(T)/T nonincreasing.
inline ExactRational log_majorant(const BigInt& T) {
  std::size_t m = bit_length(T) - 1;
  BigInt base = pow2(m);
  return ExactRational(static_cast<unsigned long>(m + 1)) + make_rational(T - base, base);
}

/// Bound on |P sum_{n>T} sign c_n / d_n| for one component (coefficient excluded).
inline ExactRational component_tail(const Component& comp, const BigInt& P, const BigInt& T) {
  switch (comp.kind) {
    case TermKind::Power:
      return make_rational(P, pow_ui(T, comp.s - 1) * (comp.s - 1));
    case TermKind::AltLog:
      return ExactRational(2 * P) * log_majorant(T) / ExactRational(T);
    case TermKind::Hyper:
    case TermKind::ErdosDen: {
      const bool hyper = comp.kind == TermKind::Hyper;
      const BigInt constant = hyper ? 4 : 2;
      BigInt t1 = T + 1;
      if (t1 <= kExactTailLimit) {
        unsigned long m = t1.get_ui();
        if (hyper) return make_rational(constant * P, pow_ui(t1, m));
        BigInt fact = 1;
        for (unsigned long j = 2; j <= m; ++j) fact *= j;
        return make_rational(constant * P, fact + 1);
      }
      // 2^-E with E a lower bound on log2 of (T+1)^(T+1), resp. (T+1)!
      double e = kCoarseTailBitsCap;
      if (bit_length(t1) < 30) {
        double t = t1.get_d();
        double exact_bits = hyper ? t * std::log2(t) : std::lgamma(t + 1) / std::log(2.0);
        e = std::min(e, std::floor(exact_bits) - 1);
      }
      return make_rational(constant * P, pow2(static_cast<std::size_t>(e)));
    }
  }
  return 0;
}

inline ExactRational abs_of(const BigInt& v) { return ExactRational(v < 0 ? BigInt(-v) : v); }

inline ExactRational family_tail(const std::vector<Component>& comps, const BigInt& P, const BigInt& T) {
  ExactRational total = 0;
  for (const auto& c : comps) total += abs_of(c.coef) * component_tail(c, P, T);
  return total;
}

/// Upper bound on |x|.
inline ExactRational abs_upper_bound(const RealParameter& x) { return psl::abs_of(upper_bound(x)); }

}  // namespace detail

/// The truncation point the proofs use: floor((N!)^((2k-1)/(k-1))), (N!)^3,
/// N^2, N!+1 and N^(N(K+1)).
inline BigInt paper_truncation(const SeriesFamily& family, unsigned long N) {
  validate(family);
  BigInt fact = 1;
  for (unsigned long j = 2; j <= N; ++j) fact *= j;
  if (auto* z = std::get_if<Zeta>(&family)) {
    unsigned long k = static_cast<unsigned long>(z->k);
    BigInt powered = pow_ui(fact, 2 * k - 1), root;
    mpz_root(root.get_mpz_t(), powered.get_mpz_t(), k - 1);
    return root;
  }
  if (std::holds_alternative<EulerLog>(family)) return pow_ui(fact, 3);
  if (std::holds_alternative<Sophomore>(family)) return BigInt(N) * N;
  if (std::holds_alternative<Erdos>(family)) return fact + 1;
  const auto& l = std::get<LinComb>(family);
  return pow_ui(BigInt(N), N * static_cast<unsigned long>(l.K + 1));
}

/// Certified bound on the discarded mass P_N |sum_{n>T} ...|, for T > N.
inline ExactRational tail_bound(const SeriesFamily& family, unsigned long N, const BigInt& T) {
  validate(family);
  if (T <= N) throw std::invalid_argument("tail_bound requires T > N");
  BigInt P = prefix_product(family, N).value();
  return detail::family_tail(detail::components(family), P, T);
}

/// T actually used by a schedule; `scale` bounds |q x|.
inline BigInt choose_truncation(const SeriesFamily& family, unsigned long N, const TruncationSchedule& sched,
                                const ExactRational& scale = 1) {
  if (std::holds_alternative<PaperExact>(sched)) return paper_truncation(family, N);
  if (auto* c = std::get_if<Capped>(&sched)) {
    if (c->T_max <= N) throw std::invalid_argument("cap:T must exceed N");
    BigInt t = paper_truncation(family, N);
    return t < c->T_max ? t : c->T_max;
  }
  const ExactRational& eps = std::get<ErrorTarget>(sched).eps;
  if (eps <= 0) throw std::invalid_argument("error target must be positive");
  BigInt lo = N, hi = BigInt(N) + 1;
  if (scale == 0) return hi;
  BigInt P = prefix_product(family, N).value();
  auto comps = detail::components(family);
  // the tail gets all but 2^-16 of eps; the rest absorbs the arithmetic radius
  const ExactRational tail_eps = eps * make_rational(65535, 65536);
  auto ok = [&](const BigInt& T) { return scale * detail::family_tail(comps, P, T) <= tail_eps; };
  while (!ok(hi)) {
    lo = hi;
    hi *= 2;
  }
  // least T in (lo, hi] that meets the target
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

namespace detail {

/// P sum_{n=N+1}^{T} sum_comp coef sign c_n / d_n, exactly.
inline ExactRational criterion_sum_exact(const std::vector<Component>& comps, const BigInt& P, unsigned long N,
                                         unsigned long T) {
  std::vector<ExactRational> terms;
  terms.reserve(T > N ? T - N : 0);
  BigInt fact = 1;
  for (unsigned long j = 2; j <= N; ++j) fact *= j;
  for (unsigned long n = N + 1; n <= T; ++n) {
    fact *= n;
    ExactRational t = 0;
    for (const auto& comp : comps) {
      Term term = component_term(comp, n, fact);
      t += make_rational(comp.coef * term.sign * BigInt(term.c), term.d);
    }
    terms.push_back(t);
  }
  return ExactRational(P) * sum_fractions(terms);
}

inline double estimated_exact_bits(const std::vector<Component>& comps, unsigned long N, unsigned long T) {
  double bits = 0;
  for (unsigned long n = N + 1; n <= T; ++n)
    for (const auto& comp : comps) bits += log2_denominator(comp, static_cast<double>(n));
  return bits;
}

}  // namespace detail

/// One point of the criterion sequence for `family` at index N.
inline CriterionPoint criterion_point(const SeriesFamily& family, unsigned long N, const TruncationSchedule& sched,
                                     const BigInt& q = 1, RealParameter x = ExactRational(1),
                                     const CriterionOptions& opts = {}) {
  validate(family);
  if (N < 2) throw std::invalid_argument("criterion_point requires N >= 2");
  if (q < 1) throw std::invalid_argument("criterion_point requires q >= 1");
  if (auto* l = std::get_if<LinComb>(&family); l && l->all_zero())
    throw std::invalid_argument("lincomb coefficients must not all be zero");
  if (opts.bits < 8) throw std::invalid_argument("fixed-point width must be at least 8 bits");

  const auto comps = detail::components(family);
  const BigInt P = prefix_product(family, N).value();
  const ExactRational scale = ExactRational(q) * detail::abs_upper_bound(x);

  CriterionPoint pt;
  pt.N = N;
  pt.T_used = choose_truncation(family, N, sched, scale);
  pt.tail_err = scale * detail::family_tail(comps, P, pt.T_used);
  pt.frac = ErrorBoundedUnit(opts.bits);

  const BigInt span = pt.T_used - N;
  const bool rational = is_rational(x);
  bool use_exact = false;
  if (opts.mode == ComputeMode::Exact) {
    if (!rational) throw std::invalid_argument("exact mode requires a rational parameter");
    if (span > opts.term_budget)
      throw BudgetExceeded("exact evaluation needs " + span.get_str() + " terms, over the term budget");
    use_exact = true;
  } else if (opts.mode == ComputeMode::Auto && rational && span <= opts.exact_max_terms) {
    use_exact = detail::estimated_exact_bits(comps, N, pt.T_used.get_ui()) <= opts.exact_max_bits;
  }

  if (use_exact) {
    ExactRational xr = upper_bound(x);
    unsigned long T = pt.T_used.get_ui();
    ExactRational v = frac_exact(ExactRational(q) * xr * detail::criterion_sum_exact(comps, P, N, T));
    pt.exact_value = v;
    pt.frac = ErrorBoundedUnit::from_rational(v, opts.bits);
    pt.terms_evaluated = T - N;
    pt.exact = true;
  } else {
    // Rational stand-in for x; for an irrational x the refinement error is
    // charged to the radius through a bound on |P sum ...|.
    ExactRational xr;
    ExactRational x_slack = 0;
    if (rational) {
      xr = upper_bound(x);
    } else {
      ExactRational ybound = 0;
      for (const auto& c : comps) {
        ExactRational t = detail::abs_of(c.coef) * detail::component_tail(c, P, BigInt(N));
        ybound += c.kind == detail::TermKind::AltLog ? ExactRational(2 * t) : t;
      }
      ExactRational reach = ExactRational(q) * ybound;
      RationalInterval iv = refine(x, opts.bits + 4 + bit_length(ceil_of(reach)) + 1);
      xr = iv.lo;
      x_slack = reach * iv.width();
    }
    const BigInt& p = xr.get_num();
    const BigInt& r = xr.get_den();
    const ExactRational negligible = make_rational(BigInt(1), pow2(opts.bits + 4));

    ErrorBoundedUnit acc(opts.bits);
    std::uint64_t evaluated = 0;
    auto charge = [&](std::uint64_t count) {
      evaluated += count;
      if (evaluated > opts.term_budget) throw BudgetExceeded("criterion point exceeded the term budget");
    };

    for (const auto& comp : comps) {
      const BigInt mult = q * comp.coef * p;
      if (mult == 0) continue;
      const ExactRational mult_over_r = make_rational(mult < 0 ? BigInt(-mult) : mult, r);
      const bool smooth = comp.kind == detail::TermKind::Power || comp.kind == detail::TermKind::AltLog;

      BigInt fact = 1;
      for (unsigned long j = 2; j <= N; ++j) fact *= j;
      BigInt n = N + 1;
      BigInt head_end = pt.T_used;
      if (smooth && BigInt(N) + opts.direct_head < head_end) head_end = BigInt(N) + opts.direct_head;
      for (; n <= head_end; ++n) {
        unsigned long nu = n.get_ui();
        fact *= nu;
        detail::Term t = detail::component_term(comp, nu, fact);
        charge(1);
        acc += term_frac_mod(P, mult * t.sign * BigInt(t.c), t.d * r, opts.bits);
        if (!smooth && n < pt.T_used) {
          ExactRational rest = mult_over_r * detail::component_tail(comp, P, n);
          if (rest <= negligible) {
            acc.widen(rest);
            ++n;
            break;
          }
        }
      }
      if (!smooth || n > pt.T_used) continue;

      // [n, T] through Euler-Maclaurin.
      ExactRational tol = negligible / (mult_over_r * ExactRational(P) * 16);
      Enclosure e = comp.kind == detail::TermKind::Power ? power_sum(comp.s, n, pt.T_used, tol)
                                                          : alternating_log_sum(n, pt.T_used, tol);
      ExactRational center = ExactRational(mult * P) * e.center / ExactRational(r);
      acc += ErrorBoundedUnit::from_rational(center, opts.bits);
      acc.widen(mult_over_r * ExactRational(P) * e.radius);
    }
    acc.widen(x_slack);
    pt.frac = acc;
    pt.terms_evaluated = evaluated;
    pt.exact = acc.error_radius() == 0;
  }

  ExactRational total = pt.error_total();
  pt.uninformative = total >= ExactRational(1, 4) || pt.frac.uninformative();
  if (auto* et = std::get_if<ErrorTarget>(&sched); et && total > et->eps) pt.uninformative = true;
  return pt;
}

/// Point of the linear-combination criterion sum_j A_j (N!)^K sum ...
inline CriterionPoint lincomb_point(int K, const std::vector<std::int64_t>& A, unsigned long N,
                                    const TruncationSchedule& sched, const BigInt& q = 1,
                                    RealParameter x = ExactRational(1), const CriterionOptions& opts = {}) {
  return criterion_point(LinComb{K, A}, N, sched, q, std::move(x), opts);
}

// ---------------------------------------------------------------------------
// Oracles

struct OracleOptions {
  /// Limit on the working numerator size in bits.
  double max_bits = static_cast<double>(1 << 26);
};

/// The unsimplified form sum_{n=N+1}^{T} sign_n [D_{n-1} c_n x] / (d_{N+1} ... d_n),
/// floors included, summed exactly term by term.
inline ExactRational product_form_oracle(const SeriesFamily& family, unsigned long N, unsigned long T,
                                         RealParameter x, const OracleOptions& opts = {}) {
  validate(family);
  if (N < 1) throw std::invalid_argument("product_form_oracle requires N >= 1");
  if (T <= N) return 0;
  PrefixProduct pp(family, N);
  const auto comps = detail::components(family);
  const LinComb* lc = std::get_if<LinComb>(&family);

  BigInt num = 0, den = 1;
  for (unsigned long n = N + 1; n <= T; ++n) {
    BigInt prev = pp.value();  // D_{n-1}
    BigInt step = pp.step_factor();
    pp.extend();
    BigInt a = 0;
    if (lc) {
      // ((n-1)!)^K n^(K-j) for the power parts, ((n-1)!)^K n^(K-1) floor(log2 n) for the alternating part
      for (const auto& comp : comps) {
        BigInt base;
        int sign = 1;
        if (comp.kind == detail::TermKind::Power) {
          base = prev * pow_ui(BigInt(n), static_cast<unsigned long>(lc->K) - comp.s);
        } else {
          base = prev * pow_ui(BigInt(n), static_cast<unsigned long>(lc->K - 1)) *
                 (63UL - static_cast<unsigned long>(__builtin_clzl(n)));
          sign = n % 2 ? -1 : 1;
        }
        a += comp.coef * sign * floor_mul(base, x);
      }
    } else {
      detail::Term t = detail::component_term(comps.front(), n, BigInt(0));
      a = t.sign * floor_mul(prev * t.c, x);
    }
    num = num * step + a;
    den *= step;
    if (static_cast<double>(bit_length(num) + bit_length(prev)) > opts.max_bits)
      throw BudgetExceeded("product_form_oracle exceeded its size budget");
  }
  return make_rational(num, den);
}

/// sum_{n=N+1}^{T} ((n-1)!)^K n^(K-j) / ((N+1) ... n)^K, term by term.
inline ExactRational interior_sum_product_form(unsigned K, unsigned j, unsigned long N, unsigned long T) {
  if (j > K) throw std::invalid_argument("interior sum requires j <= K");
  ExactRational total = 0;
  BigInt fact_prev = 1;  // (n-1)!
  for (unsigned long m = 2; m <= N; ++m) fact_prev *= m;
  BigInt rising = 1;  // (N+1) ... n
  for (unsigned long n = N + 1; n <= T; ++n) {
    rising *= n;
    total += make_rational(pow_ui(fact_prev, K) * pow_ui(BigInt(n), K - j), pow_ui(rising, K));
    fact_prev *= n;
  }
  return total;
}

/// (N!)^K sum_{n=N+1}^{T} n^-j.
inline ExactRational interior_sum_simplified(unsigned K, unsigned j, unsigned long N, unsigned long T) {
  BigInt fact = 1;
  for (unsigned long m = 2; m <= N; ++m) fact *= m;
  std::vector<ExactRational> terms;
  for (unsigned long n = N + 1; n <= T; ++n) terms.push_back(make_rational(1, pow_ui(BigInt(n), j)));
  return ExactRational(pow_ui(fact, K)) * sum_fractions(terms);
}

}  // namespace psl
