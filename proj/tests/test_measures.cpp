#include "catch_amalgamated.hpp"

#include "psl/measures.hpp"

using namespace psl;

namespace {

std::vector<BigInt> ints(std::initializer_list<long> v) {
  std::vector<BigInt> out;
  for (long x : v) out.emplace_back(x);
  return out;
}

}  // namespace

TEST_CASE("cf_digits", "[measures]") {
  CHECK(cf_digits(ExactRational(22, 7)) == ints({3, 7}));
  CHECK(cf_digits(ExactRational(1)) == ints({1}));
  CHECK(cf_digits(ExactRational(355, 113)) == ints({3, 7, 16}));
  CHECK(cf_digits(ExactRational(0)) == ints({0}));
  CHECK_THROWS_AS(cf_digits(ExactRational(-1, 2)), std::domain_error);

  // the digits rebuild the rational
  for (long p = 1; p < 60; ++p)
    for (long q = 1; q < 60; ++q) {
      ExactRational r = make_rational(p, q);
      ContinuedFraction cf(cf_digits(r));
      REQUIRE(cf.convergent(cf.size() - 1) == r);
      if (cf.size() > 1) REQUIRE(cf.digit(cf.size() - 1) >= 2);
    }
}

TEST_CASE("convergent recurrences and brackets", "[measures]") {
  ContinuedFraction cf(ints({0, 1, 2, 3, 4, 5, 6}));
  for (std::size_t k = 2; k < cf.size(); ++k) {
    CHECK(cf.p(k) == cf.digit(k) * cf.p(k - 1) + cf.p(k - 2));
    CHECK(cf.q(k) == cf.digit(k) * cf.q(k - 1) + cf.q(k - 2));
  }
  ExactRational x = cf.convergent(cf.size() - 1);
  for (std::size_t k = 0; k + 1 < cf.size(); ++k) {
    ExactRational err = abs_of(x - cf.convergent(k));
    CHECK(err <= ExactRational(1) / ExactRational(cf.q(k) * cf.q(k + 1)));
  }
  CHECK_THROWS_AS(ContinuedFraction(ints({0, 1, 0})), std::invalid_argument);
}

TEST_CASE("bounded-cf with M = 1 gives Fibonacci convergents", "[measures]") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    auto x = sample(SamplerSpec{BoundedCFSpec{1, 20}, seed});
    const auto& cf = std::get<ContinuedFraction>(x);
    BigInt f0 = 0, f1 = 1;  // q_k is F_{k+1}
    for (std::size_t k = 1; k < cf.size(); ++k) {
      REQUIRE(cf.digit(k) == 1);
      BigInt f2 = f0 + f1;
      f0 = f1;
      f1 = f2;
      REQUIRE(cf.q(k) == f1);
      REQUIRE(cf.p(k) == f0);
    }
  }
}

TEST_CASE("liouville with v = 2 and zero offset", "[measures]") {
  LiouvilleSpec spec{2, 12, 0};
  auto x = sample(SamplerSpec{spec, 3});
  const auto& cf = std::get<ContinuedFraction>(x);
  for (std::size_t k = 1; k < cf.size(); ++k) CHECK(cf.digit(k) == 1);
}

TEST_CASE("liouville v = 3 approximation property", "[measures]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = sample(SamplerSpec{LiouvilleSpec{3, 6, 9}, seed});
    auto& cf = std::get<ContinuedFraction>(x);
    cf.ensure(cf.size() + 1);
    for (std::size_t k = 1; k + 1 < cf.size(); ++k) {
      // |x - p_k/q_k| < 1/(q_k q_{k+1}) <= q_k^-3
      REQUIRE(pow_ui(cf.q(k), 3) <= cf.q(k) * cf.q(k + 1));
    }
  }
}

TEST_CASE("sampler validation and parsing", "[measures]") {
  CHECK_THROWS_AS(sample(SamplerSpec{BoundedCFSpec{0, 5}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(sample(SamplerSpec{LiouvilleSpec{ExactRational(3, 2), 5, 9}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(parse_sampler("gauss:3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sampler("bounded-cf:0:5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sampler("liouville:1:5"), std::invalid_argument);
  auto s = parse_sampler("liouville:5/2:7", 4);
  CHECK(std::get<LiouvilleSpec>(s.kind).v == ExactRational(5, 2));
  CHECK(to_string(s) == "liouville:5/2:7");
  CHECK(to_string(parse_sampler("bounded-cf:3:10")) == "bounded-cf:3:10");
  CHECK(to_string(parse_sampler("lebesgue:64")) == "lebesgue:64");
}

TEST_CASE("samplers are deterministic and extension is stable", "[measures]") {
  auto spec = parse_sampler("bounded-cf:5:10", 42);
  auto a = sample(spec), b = sample(spec);
  CHECK(std::get<ContinuedFraction>(a).digits() == std::get<ContinuedFraction>(b).digits());

  auto longer = sample(parse_sampler("bounded-cf:5:40", 42));
  auto& cf = std::get<ContinuedFraction>(a);
  cf.ensure(41);
  CHECK(cf.digits() == std::get<ContinuedFraction>(longer).digits());

  auto l1 = sample(parse_sampler("lebesgue:128", 9));
  auto l2 = sample(parse_sampler("lebesgue:128", 9));
  auto l3 = sample(parse_sampler("lebesgue:128", 10));
  CHECK(std::get<ExactRational>(l1) == std::get<ExactRational>(l2));
  CHECK(std::get<ExactRational>(l1) != std::get<ExactRational>(l3));
  const auto& r = std::get<ExactRational>(l1);
  CHECK(r >= 0);
  CHECK(r < 1);
  CHECK(pow2(128) % r.get_den() == 0);
}

TEST_CASE("refine", "[measures]") {
  RealParameter golden = sample(SamplerSpec{BoundedCFSpec{1, 4}, 0});
  auto iv = refine(golden, 20);
  CHECK(iv.width() <= make_rational(1, pow2(20)));
  CHECK(iv.lo < iv.hi);
  // (sqrt 5 - 1)/2 = 0.6180339887...
  CHECK(iv.lo < ExactRational(6180340, 10000000));
  CHECK(iv.hi > ExactRational(6180339, 10000000));

  RealParameter r = ExactRational(3, 7);
  auto deg = refine(r, 50);
  CHECK(deg.lo == ExactRational(3, 7));
  CHECK(deg.hi == ExactRational(3, 7));

  auto coarse = refine(golden, 1);
  CHECK(coarse.width() <= ExactRational(1, 2));
}

TEST_CASE("floor_mul", "[measures]") {
  RealParameter x = ExactRational(22, 7);
  CHECK(floor_mul(120, x) == 377);
  RealParameter third = ExactRational(1, 3);
  CHECK(floor_mul(6, third) == 2);
  RealParameter golden = sample(SamplerSpec{BoundedCFSpec{1, 4}, 0});
  CHECK(floor_mul(10, golden) == 6);
  CHECK(floor_mul(0, golden) == 0);
  CHECK(floor_mul(BigInt("1000000000000000000000"), golden) == BigInt("618033988749894848204"));

  for (long p = -30; p <= 30; ++p)
    for (long q = 1; q <= 12; ++q)
      for (long P = 0; P < 40; ++P) {
        RealParameter y = make_rational(p, q);
        BigInt f = floor_mul(P, y);
        REQUIRE(f * q <= BigInt(P) * p);
        REQUIRE(BigInt(P) * p < (f + 1) * q);
      }
}
