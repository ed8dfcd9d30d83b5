#pragma once

// Equidistribution mod 1 diagnostics: Weyl sums, star discrepancy,
// Kolmogorov-Smirnov against the uniform law, circular clustering and
// power-law decay fits.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "psl/arith.hpp"

namespace psl {

struct PointSet {
  std::vector<double> points;
  std::vector<double> radii;  // empty, or one per point
  std::map<std::string, std::string> provenance;

  PointSet() = default;
  explicit PointSet(std::vector<double> pts, std::vector<double> rad = {}) : points(std::move(pts)), radii(std::move(rad)) {
    validate();
  }

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void validate() const {
    for (double p : points)
      if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("point outside [0,1)");
    if (!radii.empty() && radii.size() != points.size()) throw std::invalid_argument("radii/points size mismatch");
    for (double r : radii)
      if (!(r >= 0.0)) throw std::invalid_argument("negative error radius");
  }
};

struct WeylSum {
  double magnitude = 0;
  double phase = 0;
};

/// S_h = (1/N) sum exp(2 pi i h x_j).
inline WeylSum weyl_sum(const std::vector<double>& points, long h) {
  if (points.empty()) throw std::invalid_argument("weyl_sum of an empty point set");
  if (h == 0) throw std::invalid_argument("weyl_sum requires h != 0");
  long double re = 0, im = 0;
  for (double x : points) {
    long double t = static_cast<long double>(h) * x;
    t -= std::floor(t);
    long double a = 2 * std::numbers::pi_v<long double> * t;
    re += std::cos(a);
    im += std::sin(a);
  }
  re /= points.size();
  im /= points.size();
  WeylSum out;
  out.magnitude = std::min(1.0, static_cast<double>(std::hypot(re, im)));
  out.phase = static_cast<double>(std::atan2(im, re));
  return out;
}

inline WeylSum weyl_sum(const PointSet& ps, long h) { return weyl_sum(ps.points, h); }

/// D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N). Works for double and
/// ExactRational points; the latter is exact.
template <class T>
T star_discrepancy(std::vector<T> points) {
  if (points.empty()) throw std::invalid_argument("star_discrepancy of an empty point set");
  std::sort(points.begin(), points.end());
  const T n(static_cast<unsigned long>(points.size()));
  T best(0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    T above = T(static_cast<unsigned long>(i + 1)) / n - points[i];
    T below = points[i] - T(static_cast<unsigned long>(i)) / n;
    if (above > best) best = above;
    if (below > best) best = below;
  }
  return best;
}

inline double star_discrepancy(const PointSet& ps) { return star_discrepancy(ps.points); }

/// Extreme discrepancy, sup over all [a,b): 1/N + max(i/N - x_(i)) - min(i/N - x_(i)).
template <class T>
T extreme_discrepancy(std::vector<T> points) {
  if (points.empty()) throw std::invalid_argument("extreme_discrepancy of an empty point set");
  std::sort(points.begin(), points.end());
  const T n(static_cast<unsigned long>(points.size()));
  T hi = T(1) / n - points[0], lo = hi;
  for (std::size_t i = 1; i < points.size(); ++i) {
    T v = T(static_cast<unsigned long>(i + 1)) / n - points[i];
    if (v > hi) hi = v;
    if (v < lo) lo = v;
  }
  return T(1) / n + hi - lo;
}

struct KSResult {
  double statistic = 0;
  double p_value = 0;
};

/// Asymptotic P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.0) {
    // P(K <= l) = sqrt(2 pi)/l sum_k exp(-(2k-1)^2 pi^2 / (8 l^2))
    double cdf = 0;
    for (int k = 1; k <= 100; ++k) {
      double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi * pi / (8 * lambda * lambda));
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2 * pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1 : -1) * term;
  }
  return std::clamp(2 * sum, 0.0, 1.0);
}

template <class T>
T ks_distance(std::vector<T> points) {
  return star_discrepancy(std::move(points));
}

/// Sup distance to the uniform CDF, with the asymptotic p-value.
inline KSResult ks_statistic(const std::vector<double>& points) {
  if (points.size() < 8) throw std::invalid_argument("ks_statistic needs at least 8 points");
  KSResult out;
  out.statistic = ks_distance(points);
  out.p_value = kolmogorov_survival(std::sqrt(static_cast<double>(points.size())) * out.statistic);
  return out;
}

inline KSResult ks_statistic(const PointSet& ps) { return ks_statistic(ps.points); }

struct Cluster {
  double center = 0;
  std::size_t count = 0;
  double radius = 0;
};

inline double circle_distance(double a, double b) {
  double d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

/// Single-linkage clusters on the circle R/Z with linkage distance eps,
/// largest first.
inline std::vector<Cluster> cluster_accumulation(const std::vector<double>& input, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("cluster_accumulation requires eps > 0");
  std::vector<double> pts(input);
  std::sort(pts.begin(), pts.end());
  const std::size_t n = pts.size();
  std::vector<Cluster> out;
  if (n == 0) return out;

  // Gap i follows point i; the last gap wraps around through 1 == 0.
  auto gap = [&](std::size_t i) { return i + 1 < n ? pts[i + 1] - pts[i] : pts[0] + 1.0 - pts[n - 1]; };
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i)
    if (gap(i) > eps) {
      start = (i + 1) % n;
      break;
    }

  auto finish = [&](const std::vector<double>& members) {
    double s = 0, c = 0;
    for (double m : members) {
      s += std::sin(2 * std::numbers::pi * m);
      c += std::cos(2 * std::numbers::pi * m);
    }
    double center = std::atan2(s, c) / (2 * std::numbers::pi);
    if (center < 0) center += 1.0;
    if (center >= 1.0) center = 0.0;
    double radius = 0;
    for (double m : members) radius = std::max(radius, circle_distance(m, center));
    out.push_back({center, members.size(), radius});
  };

  if (start == n) {
    finish(pts);  // every gap is linked
  } else {
    std::vector<double> members;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t i = (start + k) % n;
      members.push_back(pts[i]);
      if (gap(i) > eps) {
        finish(members);
        members.clear();
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.center < b.center;
  });
  return out;
}

struct DecayPoint {
  double N = 0;
  double lo = 0;
  double hi = 0;
};

struct DecayFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  bool consistent_with_inverse_n = false;
};

/// Least squares of log(midpoint) on log N; intervals reaching 0 are dropped.
inline DecayFit decay_fit(const std::vector<DecayPoint>& values, double tolerance = 0.1) {
  if (values.size() < 4) throw std::invalid_argument("decay_fit needs at least 4 points");
  std::vector<double> xs, ys;
  DecayFit fit;
  for (const auto& v : values) {
    if (!(v.lo > 0) || !(v.N > 0)) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(std::log(v.N));
    ys.push_back(std::log((v.lo + v.hi) / 2));
  }
  fit.used = xs.size();
  if (fit.used < 2) throw std::domain_error("decay_fit: fewer than 2 points with positive lower bounds");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw std::domain_error("decay_fit: all N equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / xs.size());
  fit.consistent_with_inverse_n = fit.slope <= -1.0 + tolerance;
  return fit;
}

// ---------------------------------------------------------------------------
// Reports

struct DiagnosticsOptions {
  int harmonics = 8;
  double cluster_eps = 1e-3;
  std::size_t max_clusters = 10;
};

struct DiagnosticsReport {
  std::size_t count = 0;
  std::vector<std::pair<long, WeylSum>> weyl;
  double d_star = 0;
  std::optional<KSResult> ks;
  std::vector<Cluster> clusters;
  std::size_t cluster_total = 0;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["count"] = count;
    nlohmann::ordered_json w = nlohmann::ordered_json::object();
    for (const auto& [h, s] : weyl) w[std::to_string(h)] = s.magnitude;
    j["weyl"] = w;
    j["d_star"] = d_star;
    if (ks) {
      j["ks"] = ks->statistic;
      j["ks_p"] = ks->p_value;
    } else {
      j["ks"] = nullptr;
      j["ks_p"] = nullptr;
    }
    nlohmann::ordered_json cl = nlohmann::ordered_json::array();
    for (const auto& c : clusters) cl.push_back({{"center", c.center}, {"count", c.count}, {"radius", c.radius}});
    j["clusters"] = cl;
    j["cluster_total"] = cluster_total;
    j["notes"] = notes;
    return j;
  }
};

inline DiagnosticsReport diagnose(const PointSet& ps, const DiagnosticsOptions& opts = {}) {
  ps.validate();
  DiagnosticsReport r;
  r.count = ps.size();
  if (ps.empty()) {
    r.notes.push_back("empty point set");
    return r;
  }
  for (long h = 1; h <= opts.harmonics; ++h) r.weyl.emplace_back(h, weyl_sum(ps, h));
  r.d_star = star_discrepancy(ps);
  if (ps.size() >= 8)
    r.ks = ks_statistic(ps);
  else
    r.notes.push_back("fewer than 8 points: KS statistic omitted");
  auto clusters = cluster_accumulation(ps.points, opts.cluster_eps);
  r.cluster_total = clusters.size();
  if (clusters.size() > opts.max_clusters) clusters.resize(opts.max_clusters);
  r.clusters = std::move(clusters);
  for (double rad : ps.radii)
    if (rad > opts.cluster_eps / 10) {
      r.notes.push_back("some error radii exceed eps/10: clusters are numerically fragile");
      break;
    }
  r.notes.push_back("gap condition on the underlying sequence is assumed, not verified");
  return r;
}

}  // namespace psl
