#pragma once

// Experiment harness behind the `psl` tool: configs, JSON-lines records, the
// worker pool and the subcommands. Kept in the library so tests can drive the
// commands without spawning processes.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "psl/criteria.hpp"
#include "psl/equidist.hpp"
#include "psl/measures.hpp"

namespace psl {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitBudget = 2, kExitIO = 3 };

/// I/O or schema failure; maps to exit code 3.
class IOError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string family = "zeta:2";
  std::string schedule = "paper";
  unsigned long n_start = 2;
  unsigned long n_end = 10;
  std::string q = "1";
  std::string x;        // literal rational; empty means x = 1 unless a sampler is set
  std::string sampler;  // sampler spec; empty means none
  std::uint64_t seed = 0;
  std::uint64_t samples = 1;
  std::string out;     // JSON-lines path; empty means stdout
  std::string report;  // diagnostics JSON path for `metric`
  unsigned workers = 0;  // 0 means hardware concurrency
  unsigned bits = ErrorBoundedUnit::kDefaultBits;
  std::uint64_t term_budget = 100'000'000;
  std::string mode = "auto";
  double cluster_eps = 1e-3;
  bool timing = false;
};

/// Everything that determines output values; workers, paths and timing excluded.
inline std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream s;
  s << "family=" << c.family << ";schedule=" << c.schedule << ";n=" << c.n_start << ".." << c.n_end
    << ";q=" << c.q << ";x=" << c.x << ";sampler=" << c.sampler << ";seed=" << c.seed << ";samples=" << c.samples
    << ";bits=" << c.bits << ";budget=" << c.term_budget << ";mode=" << c.mode;
  return s.str();
}

/// 64-bit FNV-1a of the canonical config, as 16 hex digits.
inline std::string config_fingerprint(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

/// Flag value, overridden by PSL_WORKERS, defaulting to hardware concurrency.
inline unsigned resolve_workers(unsigned flag) {
  if (const char* env = std::getenv("PSL_WORKERS"); env && *env) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  if (flag >= 1) return flag;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Runs fn(i) for i in [0, count) on `workers` threads. Results must be
/// written by index; the first exception is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, count); ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

inline ComputeMode parse_mode(const std::string& m) {
  if (m == "auto") return ComputeMode::Auto;
  if (m == "exact") return ComputeMode::Exact;
  if (m == "fixed") return ComputeMode::FixedPoint;
  throw std::invalid_argument("unknown mode '" + m + "' (auto|exact|fixed)");
}

inline BigInt parse_positive_integer(const std::string& text, const char* what) {
  BigInt v;
  if (text.empty() || v.set_str(text, 10) != 0 || v < 1)
    throw std::invalid_argument(std::string(what) + " must be a positive integer");
  return v;
}

/// Decimal with `digits` places, rounded up.
inline std::string to_decimal_up(const ExactRational& r, int digits) {
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
  return to_decimal(make_rational(ceil_of(r * ExactRational(scale)), scale), digits);
}

// ---------------------------------------------------------------------------
// Records

struct PointTask {
  std::uint64_t sample = 0;
  unsigned long N = 0;
};

struct PointOutcome {
  std::optional<CriterionPoint> point;
  std::string skip_reason;
  bool budget = false;
  double seconds = 0;
};

inline nlohmann::ordered_json point_record(const std::string& fingerprint, const std::string& family,
                                           const std::optional<std::uint64_t>& sample, const std::string& x_text,
                                           unsigned long N, const PointOutcome& o, bool timing) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = fingerprint;
  j["family"] = family;
  if (sample) j["sample"] = *sample;
  j["x"] = x_text;
  j["N"] = N;
  if (!o.point) {
    j["skipped"] = true;
    j["reason"] = o.skip_reason;
  } else {
    const CriterionPoint& p = *o.point;
    RationalInterval d = p.dist();
    j["skipped"] = false;
    j["T_used"] = p.T_used.get_str();
    j["frac"] = to_decimal(p.value(), 40);
    j["error_radius"] = to_scientific_up(p.radius());
    j["tail_err"] = to_scientific_up(p.tail_err);
    j["dist_lo"] = to_decimal(d.lo, 40);
    j["dist_hi"] = to_decimal_up(d.hi, 40);
    j["exact"] = p.exact;
    j["uninformative"] = p.uninformative;
  }
  if (timing) j["wall_time"] = o.seconds;
  return j;
}

inline CriterionOptions criterion_options(const ExperimentConfig& cfg) {
  CriterionOptions o;
  o.bits = cfg.bits;
  o.term_budget = cfg.term_budget;
  o.mode = parse_mode(cfg.mode);
  return o;
}

inline PointOutcome run_point(const SeriesFamily& family, unsigned long N, const TruncationSchedule& sched,
                              const BigInt& q, RealParameter x, const CriterionOptions& opts) {
  PointOutcome o;
  auto t0 = std::chrono::steady_clock::now();
  try {
    o.point = criterion_point(family, N, sched, q, std::move(x), opts);
  } catch (const BudgetExceeded& e) {
    o.skip_reason = e.what();
    o.budget = true;
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

struct CommandResult {
  int exit_code = kExitOk;
  std::size_t records = 0;
  std::size_t skipped = 0;
  nlohmann::ordered_json report;
};

class OutputSink {
 public:
  explicit OutputSink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::out | std::ios::trunc);
      if (!file_) throw IOError("cannot open '" + path + "' for writing");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }
  void line(const nlohmann::ordered_json& j) {
    *out_ << j.dump() << '\n';
    if (!*out_) throw IOError("write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

struct ParsedConfig {
  SeriesFamily family;
  TruncationSchedule schedule;
  BigInt q;
  CriterionOptions options;
};

inline ParsedConfig parse_config(const ExperimentConfig& cfg) {
  if (cfg.n_start < 2) throw std::invalid_argument("--n-start must be at least 2");
  if (cfg.n_end < cfg.n_start) throw std::invalid_argument("--n-end must be >= --n-start");
  if (!cfg.x.empty() && !cfg.sampler.empty()) throw std::invalid_argument("--x and --sampler are exclusive");
  return {parse_family(cfg.family), parse_schedule(cfg.schedule), parse_positive_integer(cfg.q, "--q"),
          criterion_options(cfg)};
}

/// Parameter for sample `index`: the literal, a fresh draw, or 1.
inline RealParameter parameter_for(const ExperimentConfig& cfg, std::uint64_t index) {
  if (!cfg.x.empty()) return parse_rational(cfg.x);
  if (!cfg.sampler.empty()) return sample(parse_sampler(cfg.sampler, derive_key(cfg.seed, index)));
  return ExactRational(1);
}

inline void print_summary(std::ostream& log, const std::vector<PointOutcome>& outcomes, double cluster_eps) {
  std::vector<double> values;
  ExactRational lo_min = 1, hi_max = 0;
  std::size_t informative = 0;
  for (const auto& o : outcomes) {
    if (!o.point || o.point->uninformative) continue;
    RationalInterval d = o.point->dist();
    if (d.lo < lo_min) lo_min = d.lo;
    if (d.hi > hi_max) hi_max = d.hi;
    ++informative;
    values.push_back(o.point->frac.to_double());
  }
  log << "points: " << outcomes.size() << ", informative: " << informative << "\n";
  if (informative == 0) return;
  log << "dist_to_int range: [" << lo_min.get_d() << ", " << hi_max.get_d() << "]\n";
  auto clusters = cluster_accumulation(values, cluster_eps);
  log << "clusters (eps " << cluster_eps << "): " << clusters.size();
  for (std::size_t i = 0; i < clusters.size() && i < 3; ++i)
    log << (i ? ", " : " | ") << clusters[i].center << " x" << clusters[i].count;
  log << "\n";
}

// ---------------------------------------------------------------------------
// Commands

/// Criterion points for N in [n_start, n_end] at one parameter.
inline CommandResult cmd_criterion(const ExperimentConfig& cfg, std::ostream& stdout_stream, std::ostream& log) {
  ParsedConfig pc = parse_config(cfg);
  OutputSink sink(cfg.out, stdout_stream);
  const std::string fp = config_fingerprint(cfg);
  RealParameter x = parameter_for(cfg, 0);
  const std::string x_text = to_string(x);

  std::size_t count = cfg.n_end - cfg.n_start + 1;
  std::vector<PointOutcome> outcomes(count);
  parallel_for(count, resolve_workers(cfg.workers), [&](std::size_t i) {
    outcomes[i] = run_point(pc.family, cfg.n_start + i, pc.schedule, pc.q, x, pc.options);
  });

  CommandResult res;
  for (std::size_t i = 0; i < count; ++i) {
    sink.line(point_record(fp, cfg.family, std::nullopt, x_text, cfg.n_start + i, outcomes[i], cfg.timing));
    ++res.records;
    if (!outcomes[i].point) ++res.skipped;
  }
  print_summary(log, outcomes, cfg.cluster_eps);
  if (res.skipped) log << "skipped (budget): " << res.skipped << "\n";
  if (res.skipped == count) res.exit_code = kExitBudget;
  return res;
}

/// Criterion sequences at `samples` sampled parameters, pooled diagnostics.
inline CommandResult cmd_metric_experiment(const ExperimentConfig& cfg, std::ostream& stdout_stream,
                                           std::ostream& log) {
  ParsedConfig pc = parse_config(cfg);
  if (cfg.sampler.empty() && cfg.x.empty()) throw std::invalid_argument("metric needs --sampler or --x");
  if (cfg.samples < 1) throw std::invalid_argument("--samples must be at least 1");
  OutputSink sink(cfg.out, stdout_stream);
  const std::string fp = config_fingerprint(cfg);
  const unsigned workers = resolve_workers(cfg.workers);

  std::vector<RealParameter> params;
  params.reserve(cfg.samples);
  for (std::uint64_t s = 0; s < cfg.samples; ++s) params.push_back(parameter_for(cfg, s));

  const std::size_t per_sample = cfg.n_end - cfg.n_start + 1;
  std::vector<PointTask> tasks;
  for (std::uint64_t s = 0; s < cfg.samples; ++s)
    for (unsigned long N = cfg.n_start; N <= cfg.n_end; ++N) tasks.push_back({s, N});
  std::vector<PointOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    // each task refines its own copy of the parameter
    outcomes[i] = run_point(pc.family, tasks[i].N, pc.schedule, pc.q, params[tasks[i].sample], pc.options);
  });

  CommandResult res;
  std::vector<double> pooled, pooled_radii;
  std::size_t excluded = 0;
  nlohmann::ordered_json per_sample_reports = nlohmann::ordered_json::array();
  DiagnosticsOptions dopt;
  dopt.cluster_eps = cfg.cluster_eps;
  for (std::uint64_t s = 0; s < cfg.samples; ++s) {
    std::vector<double> pts, radii;
    const std::string x_text = to_string(params[s]);
    for (std::size_t k = 0; k < per_sample; ++k) {
      std::size_t i = s * per_sample + k;
      const auto& o = outcomes[i];
      sink.line(point_record(fp, cfg.family, s, x_text, tasks[i].N, o, cfg.timing));
      ++res.records;
      if (!o.point) {
        ++res.skipped;
        continue;
      }
      if (o.point->uninformative) {
        ++excluded;
        continue;
      }
      pts.push_back(o.point->frac.to_double());
      radii.push_back(o.point->error_total().get_d());
    }
    nlohmann::ordered_json rep = diagnose(PointSet(pts, radii), dopt).to_json();
    rep["sample"] = s;
    rep["x"] = x_text;
    per_sample_reports.push_back(rep);
    pooled.insert(pooled.end(), pts.begin(), pts.end());
    pooled_radii.insert(pooled_radii.end(), radii.begin(), radii.end());
  }

  PointSet pooled_set(pooled, pooled_radii);
  DiagnosticsReport pooled_report = diagnose(pooled_set, dopt);
  if (cfg.sampler.empty()) pooled_report.notes.push_back("single literal parameter: no equidistribution claim");
  else pooled_report.notes.push_back("surrogate distribution: " + cfg.sampler);

  nlohmann::ordered_json report;
  report["schema_version"] = kSchemaVersion;
  report["config"] = fp;
  report["family"] = cfg.family;
  report["schedule"] = cfg.schedule;
  report["sampler"] = cfg.sampler.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(cfg.sampler);
  report["samples"] = cfg.samples;
  report["records"] = res.records;
  report["skipped"] = res.skipped;
  report["uninformative_excluded"] = excluded;
  report["pooled"] = pooled_report.to_json();
  report["per_sample"] = per_sample_reports;
  res.report = report;

  std::string report_path = cfg.report;
  if (report_path.empty() && !cfg.out.empty()) report_path = cfg.out + ".report.json";
  if (!report_path.empty()) {
    std::ofstream rf(report_path, std::ios::out | std::ios::trunc);
    if (!rf) throw IOError("cannot open '" + report_path + "' for writing");
    rf << report.dump(2) << '\n';
  }

  log << "records: " << res.records << ", skipped: " << res.skipped << ", uninformative excluded: " << excluded
      << "\n";
  log << "pooled points: " << pooled.size() << ", D* = " << pooled_report.d_star;
  if (pooled_report.ks) log << ", KS = " << pooled_report.ks->statistic << " (p = " << pooled_report.ks->p_value << ")";
  log << "\n";
  if (res.skipped == res.records) res.exit_code = kExitBudget;
  return res;
}

struct CantorResult {
  ExactRational x;
  std::vector<ExactRational> orbit;
  std::size_t outside = 0;
  ExactRational d_star;
  ExactRational d_extreme;
  ExactRational bound;
  std::vector<Cluster> clusters;

  bool all_outside() const { return outside == orbit.size(); }
  // The empty middle third forces the extreme discrepancy up to 1/3; the star
  // discrepancy only sees intervals [0,t) and can be as small as about 1/6.
  bool bound_holds() const { return d_extreme >= bound; }
  bool star_bound_holds() const { return d_star >= bound; }
};

/// x = 0.(t_1 ... t_depth) repeating in base 3 with t_i in {0, 2}.
inline ExactRational cantor_parameter(std::uint64_t seed, std::size_t depth) {
  if (depth < 10) throw std::invalid_argument("demo-cantor requires depth >= 10");
  std::uint64_t key = derive_key(seed, 0xCA7);
  BigInt block = 0;
  for (std::size_t i = 0; i < depth; ++i) block = block * 3 + BigInt(static_cast<unsigned long>(2 * uniform_below(key, i, 2)));
  return make_rational(block, pow_ui(BigInt(3), depth) - 1);
}

/// {3^n x} for n = 1..count, exactly, with the middle-third check.
inline CantorResult cantor_orbit(const ExactRational& x, std::size_t count) {
  if (count < 1) throw std::invalid_argument("demo-cantor requires count >= 1");
  CantorResult r;
  r.x = x;
  ExactRational v = frac_exact(x);
  for (std::size_t n = 1; n <= count; ++n) {
    v = frac_exact(v * 3);
    r.orbit.push_back(v);
    if (v <= ExactRational(1, 3) || v >= ExactRational(2, 3)) ++r.outside;
  }
  r.d_star = star_discrepancy(r.orbit);
  r.d_extreme = extreme_discrepancy(r.orbit);
  r.bound = ExactRational(1, 3) - ExactRational(1, static_cast<unsigned long>(count));
  std::vector<double> pts;
  for (const auto& p : r.orbit) pts.push_back(p.get_d());
  r.clusters = cluster_accumulation(pts, 1e-9);
  return r;
}

inline CommandResult cmd_demo_cantor(std::uint64_t seed, std::size_t depth, std::size_t count,
                                     const std::string& x_literal, const std::string& out_path,
                                     std::ostream& stdout_stream, std::ostream& log) {
  ExactRational x = x_literal.empty() ? cantor_parameter(seed, depth) : parse_rational(x_literal);
  CantorResult r = cantor_orbit(x, count);
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["x"] = to_string(r.x);
  j["count"] = count;
  j["outside_middle_third"] = r.outside;
  j["all_outside"] = r.all_outside();
  j["d_star"] = to_decimal(r.d_star, 30);
  j["d_extreme"] = to_decimal(r.d_extreme, 30);
  j["lower_bound"] = to_decimal(r.bound, 30);
  j["bound_holds"] = r.bound_holds();
  j["d_star_bound_holds"] = r.star_bound_holds();
  nlohmann::ordered_json cl = nlohmann::ordered_json::array();
  for (const auto& c : r.clusters) cl.push_back({{"center", c.center}, {"count", c.count}});
  j["clusters"] = cl;
  OutputSink sink(out_path, stdout_stream);
  sink.line(j);
  log << r.outside << "/" << count << " orbit points outside (1/3, 2/3); D* = " << r.d_star.get_d()
      << ", extreme discrepancy = " << r.d_extreme.get_d() << " (bound " << r.bound.get_d() << ")\n";
  CommandResult res;
  res.records = 1;
  res.report = j;
  return res;
}

// ---------------------------------------------------------------------------
// Export

struct ExportRow {
  unsigned long N;
  std::string frac;
  std::string err_total;
  std::string dist_lo;
  std::string dist_hi;
};

inline std::vector<ExportRow> read_records(std::istream& in) {
  std::vector<ExportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IOError("line " + std::to_string(lineno) + ": not JSON (" + e.what() + ")");
    }
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
        j["schema_version"].get<int>() != kSchemaVersion)
      throw IOError("line " + std::to_string(lineno) + ": schema_version mismatch (expected " +
                    std::to_string(kSchemaVersion) + ")");
    if (!j.contains("N")) continue;  // reports and other non-point lines
    if (j.value("skipped", false)) continue;
    try {
      ExactRational err = parse_rational(j.at("error_radius").get<std::string>()) +
                          parse_rational(j.at("tail_err").get<std::string>());
      rows.push_back({j.at("N").get<unsigned long>(), j.at("frac").get<std::string>(), to_scientific_up(err),
                      j.at("dist_lo").get<std::string>(), j.at("dist_hi").get<std::string>()});
    } catch (const std::exception& e) {
      throw IOError("line " + std::to_string(lineno) + ": malformed record (" + e.what() + ")");
    }
  }
  return rows;
}

inline void write_export(const std::vector<ExportRow>& rows, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    out << "N,frac,err_total,dist_lo,dist_hi\n";
    for (const auto& r : rows) out << r.N << ',' << r.frac << ',' << r.err_total << ',' << r.dist_lo << ',' << r.dist_hi << '\n';
  } else if (format == "gnuplot") {
    out << "# N frac\n";
    for (const auto& r : rows) out << r.N << ' ' << r.frac << '\n';
  } else {
    throw std::invalid_argument("unknown export format '" + format + "' (csv|gnuplot)");
  }
}

inline CommandResult cmd_export(const std::string& in_path, const std::string& format, const std::string& out_path,
                                std::ostream& stdout_stream) {
  if (format != "csv" && format != "gnuplot") throw std::invalid_argument("unknown export format '" + format + "'");
  std::ifstream in(in_path);
  if (!in) throw IOError("cannot open '" + in_path + "'");
  auto rows = read_records(in);
  OutputSink sink(out_path, stdout_stream);
  write_export(rows, format, sink.stream());
  CommandResult res;
  res.records = rows.size();
  return res;
}

// ---------------------------------------------------------------------------
// Sample

inline nlohmann::ordered_json parameter_json(std::uint64_t index, RealParameter x, std::size_t digits_shown = 16) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["index"] = index;
  j["x"] = to_string(x, digits_shown);
  RationalInterval iv = refine(x, 128);
  j["lo"] = to_decimal(iv.lo, 40);
  j["hi"] = to_decimal_up(iv.hi, 40);
  if (auto* cf = std::get_if<ContinuedFraction>(&x)) {
    nlohmann::ordered_json d = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < cf->size() && k <= digits_shown; ++k) d.push_back(cf->digit(k).get_str());
    j["digits"] = d;
  }
  return j;
}

inline CommandResult cmd_sample(const ExperimentConfig& cfg, std::ostream& stdout_stream) {
  if (cfg.sampler.empty()) throw std::invalid_argument("sample needs --sampler");
  OutputSink sink(cfg.out, stdout_stream);
  CommandResult res;
  for (std::uint64_t s = 0; s < cfg.samples; ++s) {
    sink.line(parameter_json(s, parameter_for(cfg, s)));
    ++res.records;
  }
  return res;
}

}  // namespace psl
