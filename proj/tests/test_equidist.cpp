#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "psl/equidist.hpp"

using namespace psl;
using Catch::Approx;

namespace {

std::vector<double> centered_grid(std::size_t n) {
  std::vector<double> v;
  for (std::size_t i = 1; i <= n; ++i) v.push_back((2.0 * i - 1) / (2.0 * n));
  return v;
}

std::vector<double> uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// brute-force D* over every interval [0,t) with t at a point or just past it
double brute_discrepancy(const std::vector<double>& pts) {
  const double n = static_cast<double>(pts.size());
  double best = 0;
  std::vector<double> ts(pts);
  ts.push_back(1.0);
  for (double t : ts) {
    double below = 0, upto = 0;
    for (double p : pts) {
      below += p < t;
      upto += p <= t;
    }
    best = std::max({best, std::fabs(below / n - t), std::fabs(upto / n - t)});
  }
  return best;
}

// sup over [a,b) with a, b ranging over {0, 1, points}, counting both open and closed ends
double brute_extreme(const std::vector<double>& pts) {
  const double n = static_cast<double>(pts.size());
  std::vector<double> ends(pts);
  ends.push_back(0.0);
  ends.push_back(1.0);
  double best = 0;
  for (double a : ends)
    for (double b : ends) {
      if (b < a) continue;
      double closed = 0, open = 0;
      for (double p : pts) {
        closed += p >= a && p <= b;
        open += p > a && p < b;
      }
      best = std::max({best, std::fabs(closed / n - (b - a)), std::fabs(open / n - (b - a))});
    }
  return best;
}

}  // namespace

TEST_CASE("point set validation", "[equidist]") {
  CHECK_THROWS_AS(PointSet({0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PointSet({-0.1}), std::invalid_argument);
  CHECK_THROWS_AS(PointSet({0.1, 0.2}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(PointSet({0.1}, {-1.0}), std::invalid_argument);
  CHECK_NOTHROW(PointSet({0.0, 0.999}, {0.0, 1e-9}));
}

TEST_CASE("weyl sums", "[equidist]") {
  CHECK(weyl_sum({0.0, 0.0, 0.0}, 1).magnitude == Approx(1.0));
  CHECK(weyl_sum({0.0, 0.5}, 1).magnitude == Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(weyl_sum(std::vector<double>{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(weyl_sum({0.3}, 0), std::invalid_argument);

  std::vector<double> kron;
  const double r2 = std::sqrt(2.0);
  for (int j = 1; j <= 10000; ++j) kron.push_back(std::fmod(j * r2, 1.0));
  CHECK(weyl_sum(kron, 1).magnitude < 0.01);

  // points on a coset of the 1/h grid give |S_h| = 1
  std::vector<double> coset{0.1, 0.1 + 1.0 / 3, 0.1 + 2.0 / 3};
  CHECK(weyl_sum(coset, 3).magnitude == Approx(1.0));
  CHECK(weyl_sum(coset, 1).magnitude < 1e-12);
  CHECK(weyl_sum({0.25}, -1).phase == Approx(-std::numbers::pi / 2));
}

TEST_CASE("weyl sums are bounded and permutation invariant", "[equidist][property]") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto v = uniform(50 + seed, seed);
    for (long h : {-3L, 1L, 2L, 17L}) {
      auto a = weyl_sum(v, h);
      REQUIRE(a.magnitude >= 0);
      REQUIRE(a.magnitude <= 1);
      auto w = v;
      std::shuffle(w.begin(), w.end(), std::mt19937_64(seed + 100));
      REQUIRE(weyl_sum(w, h).magnitude == Approx(a.magnitude).margin(1e-12));
    }
  }
}

TEST_CASE("star discrepancy examples", "[equidist]") {
  CHECK(star_discrepancy(centered_grid(100)) == Approx(1.0 / 200));
  CHECK(star_discrepancy(std::vector<double>{0.0}) == 1.0);
  CHECK(star_discrepancy(std::vector<double>{0.25, 0.75}) == 0.25);
  std::vector<ExactRational> grid;
  for (long i = 1; i <= 7; ++i) grid.push_back(ExactRational(2 * i - 1, 14));
  CHECK(star_discrepancy(grid) == ExactRational(1, 14));
  CHECK_THROWS_AS(star_discrepancy(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("star discrepancy properties", "[equidist][property]") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto v = uniform(1 + seed * 3, seed);
    double d = star_discrepancy(v);
    REQUIRE(d >= 1.0 / (2.0 * v.size()) - 1e-15);
    REQUIRE(d <= 1.0);
    REQUIRE(d == Approx(brute_discrepancy(v)).margin(1e-12));
    auto w = v;
    std::reverse(w.begin(), w.end());
    REQUIRE(star_discrepancy(w) == d);
  }
}

TEST_CASE("extreme discrepancy", "[equidist]") {
  CHECK(extreme_discrepancy(centered_grid(100)) == Approx(1.0 / 100));
  std::vector<ExactRational> split{ExactRational(1, 10), ExactRational(9, 10)};
  CHECK(extreme_discrepancy(split) == ExactRational(4, 5) - ExactRational(1, 2) + ExactRational(1, 2));
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto v = uniform(2 + seed, seed);
    double e = extreme_discrepancy(v);
    REQUIRE(e >= star_discrepancy(v) - 1e-15);
    REQUIRE(e <= 2 * star_discrepancy(v) + 1e-15);
    REQUIRE(e == Approx(brute_extreme(v)).margin(1e-12));
  }
}

TEST_CASE("kolmogorov-smirnov", "[equidist]") {
  auto g = ks_statistic(centered_grid(100));
  CHECK(g.statistic == Approx(0.005));
  CHECK(g.p_value == Approx(1.0).margin(1e-9));

  auto m = ks_statistic(std::vector<double>(1000, 0.5));
  CHECK(m.statistic == Approx(0.5));
  CHECK(m.p_value < 1e-100);

  CHECK(ks_statistic(uniform(10000, 2024)).p_value > 1e-3);
  CHECK_THROWS_AS(ks_statistic(std::vector<double>(7, 0.1)), std::invalid_argument);

  // both branches of the survival function meet near lambda = 1
  CHECK(kolmogorov_survival(1.0 - 1e-9) == Approx(kolmogorov_survival(1.0)).margin(1e-8));
  CHECK(kolmogorov_survival(1.36) == Approx(0.0494).margin(2e-4));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(0.3) == Approx(1.0).margin(1e-6));
}

TEST_CASE("accumulation clusters", "[equidist]") {
  auto c = cluster_accumulation({0.1, 0.1001, 0.9}, 0.01);
  REQUIRE(c.size() == 2);
  CHECK(c[0].count == 2);
  CHECK(c[0].center == Approx(0.10005).margin(1e-9));
  CHECK(c[1].count == 1);
  CHECK(c[1].center == Approx(0.9));

  auto w = cluster_accumulation({0.999, 0.001}, 0.01);
  REQUIRE(w.size() == 1);
  CHECK(w[0].count == 2);
  CHECK(circle_distance(w[0].center, 0.0) < 1e-9);
  CHECK(w[0].radius == Approx(0.001).margin(1e-12));

  CHECK(cluster_accumulation(centered_grid(50), 0.01).size() == 50);
  CHECK(cluster_accumulation({}, 0.1).empty());
  CHECK_THROWS_AS(cluster_accumulation({0.5}, 0.0), std::invalid_argument);

  // a fully linked ring
  std::vector<double> ring;
  for (int i = 0; i < 100; ++i) ring.push_back(i / 100.0);
  auto all = cluster_accumulation(ring, 0.02);
  REQUIRE(all.size() == 1);
  CHECK(all[0].count == 100);
}

TEST_CASE("clusters partition the points", "[equidist][property]") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto v = uniform(200, seed);
    const double eps = 0.002 * (1 + seed % 5);
    auto cs = cluster_accumulation(v, eps);
    std::size_t total = 0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      total += cs[i].count;
      if (i) REQUIRE(cs[i - 1].count >= cs[i].count);
    }
    REQUIRE(total == v.size());
    // one arc per gap wider than eps
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::size_t wide = sorted.front() + 1.0 - sorted.back() > eps;
    for (std::size_t i = 1; i < sorted.size(); ++i) wide += sorted[i] - sorted[i - 1] > eps;
    REQUIRE(cs.size() == std::max<std::size_t>(wide, 1));
    auto w = v;
    std::shuffle(w.begin(), w.end(), std::mt19937_64(seed));
    REQUIRE(cluster_accumulation(w, eps).size() == cs.size());
  }
}

TEST_CASE("decay fits", "[equidist]") {
  auto law = [](double c, double e) {
    std::vector<DecayPoint> v;
    for (double N = 2; N <= 40; ++N) v.push_back({N, c * std::pow(N, e), c * std::pow(N, e)});
    return v;
  };
  auto inv = decay_fit(law(0.3, -1));
  CHECK(inv.slope == Approx(-1.0));
  CHECK(inv.residual == Approx(0.0).margin(1e-12));
  CHECK(inv.consistent_with_inverse_n);

  auto flat = decay_fit(law(0.2, 0));
  CHECK(flat.slope == Approx(0.0).margin(1e-12));
  CHECK_FALSE(flat.consistent_with_inverse_n);

  CHECK(decay_fit(law(5, -2)).slope == Approx(-2.0));

  std::vector<DecayPoint> gaps{{2, 0, 0.1}, {3, 0.1, 0.1}, {4, 0.05, 0.05}, {5, 0, 0.2}, {6, 1.0 / 30, 1.0 / 30}};
  auto g = decay_fit(gaps);
  CHECK(g.excluded == 2);
  CHECK(g.used == 3);
  CHECK_THROWS_AS(decay_fit({{1, 0.1, 0.1}, {2, 0.1, 0.1}, {3, 0.1, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(decay_fit({{1, 0, 0.1}, {2, 0, 0.1}, {3, 0.1, 0.1}, {4, 0, 0.1}}), std::domain_error);
}

TEST_CASE("diagnostics report", "[equidist]") {
  PointSet ps(centered_grid(64));
  auto r = diagnose(ps);
  CHECK(r.count == 64);
  CHECK(r.weyl.size() == 8);
  CHECK(r.d_star == Approx(1.0 / 128));
  REQUIRE(r.ks);
  CHECK(r.clusters.size() == 10);
  CHECK(r.cluster_total == 64);
  auto j = r.to_json();
  CHECK(j["count"] == 64);
  CHECK(j["clusters"].size() == 10);
  CHECK(j.contains("ks_p"));

  auto small = diagnose(PointSet({0.2, 0.4}));
  CHECK_FALSE(small.ks);
  CHECK(small.to_json()["ks"].is_null());

  auto empty = diagnose(PointSet{});
  CHECK(empty.count == 0);
  CHECK_FALSE(empty.notes.empty());

  // wide radii are flagged for clustering
  auto fragile = diagnose(PointSet({0.1, 0.2}, {0.01, 0.0}));
  bool flagged = std::any_of(fragile.notes.begin(), fragile.notes.end(),
                             [](const std::string& s) { return s.find("radii") != std::string::npos; });
  CHECK(flagged);
}
