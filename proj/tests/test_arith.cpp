#include "catch_amalgamated.hpp"

#include <random>

#include "psl/arith.hpp"

using namespace psl;

namespace {

ExactRational q(long n, long d = 1) { return make_rational(BigInt(n), BigInt(d)); }

}  // namespace

TEST_CASE("frac_exact", "[arith]") {
  CHECK(frac_exact(q(22, 7)) == q(1, 7));
  CHECK(frac_exact(q(-3, 2)) == q(1, 2));
  CHECK(frac_exact(q(5)) == 0);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    long n = static_cast<long>(rng() % 2000001) - 1000000;
    long d = static_cast<long>(rng() % 1000) + 1;
    ExactRational r = q(n, d), f = frac_exact(r);
    REQUIRE(f >= 0);
    REQUIRE(f < 1);
    ExactRational diff = r - f;
    REQUIRE(diff.get_den() == 1);
  }
}

TEST_CASE("prefix products", "[arith]") {
  CHECK(prefix_product(Sophomore{}, 2).value() == 4);
  CHECK(prefix_product(Erdos{}, 2).value() == 6);
  CHECK(prefix_product(Zeta{2}, 3).value() == 36);
  CHECK(prefix_product(EulerLog{}, 5).value() == 120);
  CHECK(prefix_product(LinComb{3, {1, 0, 1}}, 4).value() == 24 * 24 * 24);
  CHECK_THROWS_AS(prefix_product(Zeta{2}, 0), std::invalid_argument);

  SECTION("extension multiplies by the step factor") {
    for (SeriesFamily f : {SeriesFamily{Zeta{3}}, SeriesFamily{EulerLog{}}, SeriesFamily{Sophomore{}},
                           SeriesFamily{Erdos{}}, SeriesFamily{LinComb{2, {1, 1}}}}) {
      PrefixProduct p(f, 1);
      for (unsigned long N = 1; N < 15; ++N) {
        BigInt step = p.step_factor();
        BigInt before = p.value();
        p.extend();
        REQUIRE(p.value() == before * step);
        REQUIRE(p.value() == prefix_product(f, N + 1).value());
      }
    }
    // step factors (N+1)^(N+1) and (N+1)!+1
    PrefixProduct s(Sophomore{}, 4);
    CHECK(s.step_factor() == 3125);
    PrefixProduct e(Erdos{}, 4);
    CHECK(e.step_factor() == 121);
  }
}

TEST_CASE("term_frac_mod examples", "[arith]") {
  auto v = term_frac_mod(120, 1, 49);
  CHECK(abs_of(v.value() - q(22, 49)) <= v.error_radius());
  CHECK(v.error_radius() <= make_rational(1, pow2(128)));
  CHECK(term_frac_mod(6, 1, 3).value() == 0);
  CHECK(term_frac_mod(6, 1, 3).error_radius() == 0);
  CHECK(term_frac_mod(1, -1, 4).value() == q(3, 4));
  CHECK_THROWS_AS(term_frac_mod(1, 1, 0), std::domain_error);
}

TEST_CASE("term_frac_mod agrees with the exact fractional part", "[arith][property]") {
  std::mt19937_64 rng(11);
  for (unsigned bits : {16u, 64u, 128u}) {
    const ExactRational ulp = make_rational(1, pow2(bits));
    for (int i = 0; i < 3000; ++i) {
      BigInt P(static_cast<unsigned long>(rng() % 1000000));
      BigInt c(static_cast<long>(rng() % 2001) - 1000);
      BigInt d(static_cast<unsigned long>(rng() % 999999 + 1));
      auto v = term_frac_mod(P, c, d, bits);
      ExactRational exact = frac_exact(make_rational(P * c, d));
      REQUIRE(v.error_radius() <= ulp);
      REQUIRE(v.value() <= exact);
      REQUIRE(exact - v.value() <= v.error_radius());
    }
  }
}

TEST_CASE("sum_mod1", "[arith]") {
  std::vector<ErrorBoundedUnit> empty;
  auto z = sum_mod1(empty);
  CHECK(z.value() == 0);
  CHECK(z.error_radius() == 0);

  std::vector<ErrorBoundedUnit> two{ErrorBoundedUnit::from_rational(q(3, 4)), ErrorBoundedUnit::from_rational(q(3, 4))};
  CHECK(sum_mod1(two).value() == q(1, 2));
  CHECK(sum_mod1(two).error_radius() == 0);

  auto a = term_frac_mod(120, 1, 49);
  auto b = ErrorBoundedUnit::from_rational(q(3, 10));
  std::vector<ErrorBoundedUnit> ab{a, b};
  auto s = sum_mod1(ab);
  CHECK(abs_of(s.value() - (q(22, 49) + q(3, 10))) <= s.error_radius());
  CHECK(s.error_radius() <= a.error_radius() + b.error_radius());
}

TEST_CASE("sum_mod1 against an exact pipeline", "[arith][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ErrorBoundedUnit> terms;
    ExactRational exact = 0;
    int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      BigInt P(static_cast<unsigned long>(rng() % 100000 + 1));
      BigInt c(static_cast<long>(rng() % 21) - 10);
      BigInt d(static_cast<unsigned long>(rng() % 5000 + 1));
      terms.push_back(term_frac_mod(P, c, d, 64));
      exact += make_rational(P * c, d);
    }
    auto s = sum_mod1(terms);
    ExactRational target = frac_exact(exact);
    // compare on the circle
    ExactRational diff = frac_exact(s.value() - target);
    if (diff > ExactRational(1, 2)) diff = ExactRational(1) - diff;
    REQUIRE(diff <= s.error_radius());
  }
}

TEST_CASE("sum_mod1 flags a large ledger", "[arith]") {
  auto t = ErrorBoundedUnit::from_fixed(0, 8, 20);
  std::vector<ErrorBoundedUnit> v{t, t, t, t};
  auto s = sum_mod1(v);
  CHECK(s.uninformative());
  CHECK_FALSE(ErrorBoundedUnit::from_fixed(0, 8, 63).uninformative());
  CHECK(ErrorBoundedUnit::from_fixed(0, 8, 64).uninformative());
}

TEST_CASE("dist_to_int", "[arith]") {
  auto d1 = dist_to_int(ErrorBoundedUnit::from_rational(q(1, 8)));
  CHECK(d1.lo == q(1, 8));
  CHECK(d1.hi == q(1, 8));
  auto v = ErrorBoundedUnit::from_rational(q(7, 8), 16);
  v.widen(q(1, 16));
  auto d2 = dist_to_int(v);
  CHECK(d2.lo == q(1, 16));
  CHECK(d2.hi == q(3, 16));
  auto d3 = dist_to_int(ErrorBoundedUnit::from_rational(q(1, 2)));
  CHECK(d3.lo == q(1, 2));
  CHECK(d3.hi == q(1, 2));
}

TEST_CASE("text conversion", "[arith]") {
  CHECK(parse_rational("22/7") == q(22, 7));
  CHECK(parse_rational("-4/6") == q(-2, 3));
  CHECK(parse_rational("1e-3") == q(1, 1000));
  CHECK(parse_rational("0.125") == q(1, 8));
  CHECK(parse_rational("12") == 12);
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);

  CHECK(to_decimal(q(283, 1728), 12) == "0.163773148148");
  CHECK(to_decimal(q(1, 3), 3) == "0.333");
  CHECK(to_decimal(q(5), 2) == "5.00");
  CHECK(to_scientific_up(q(1, 2)) == "5.0000000e-1");
  CHECK(to_scientific_up(q(1, 3)) == "3.3333334e-1");
  CHECK(to_scientific_up(0) == "0");
  CHECK(parse_rational(to_scientific_up(q(1, 3))) >= q(1, 3));
}

TEST_CASE("binary splitting sums", "[arith]") {
  std::vector<ExactRational> terms;
  ExactRational direct = 0;
  for (long n = 1; n <= 200; ++n) {
    terms.push_back(q(1, n * n));
    direct += q(1, n * n);
  }
  CHECK(sum_fractions(terms) == direct);

  std::vector<BigInt> a{3, -1, 4, 1, -5}, s{2, 7, 1, 8, 3};
  HornerPair h = horner_sum(a, s);
  ExactRational expect = 0, den = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    den *= ExactRational(s[i]);
    expect += ExactRational(a[i]) / den;
  }
  CHECK(make_rational(h.num, h.den) == expect);
}
