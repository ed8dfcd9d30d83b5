// psl: criterion scans, metric experiments and the Cantor demo.

#include <iostream>

#include "CLI11.hpp"
#include "psl/psl.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Perturbed factorial series: criterion sequences and equidistribution diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value file mirroring the long flags; flags on the command line win");

  psl::ExperimentConfig cfg;
  std::size_t depth = 32, count = 100;
  std::string in_path, format = "csv";

  app.add_option("--family", cfg.family, "zeta:K | euler | sophomore | erdos | lincomb:K:A1,..,AK")
      ->capture_default_str();
  app.add_option("--schedule", cfg.schedule, "paper | cap:T | error:EPS")->capture_default_str();
  app.add_option("--n-start", cfg.n_start, "first N (>= 2)")->capture_default_str();
  app.add_option("--n-end", cfg.n_end, "last N")->capture_default_str();
  app.add_option("--q", cfg.q, "positive integer multiplier")->capture_default_str();
  app.add_option("--x", cfg.x, "rational parameter p/q or decimal (default 1)");
  app.add_option("--sampler", cfg.sampler, "lebesgue:bits | bounded-cf:M:depth | liouville:v:depth");
  app.add_option("--seed", cfg.seed, "experiment seed")->capture_default_str();
  app.add_option("--samples", cfg.samples, "number of sampled parameters")->capture_default_str();
  app.add_option("--out", cfg.out, "output path (default stdout)");
  app.add_option("--report", cfg.report, "diagnostics report path for metric (default OUT.report.json)");
  app.add_option("--workers", cfg.workers, "worker threads (0 = all cores; PSL_WORKERS overrides)")
      ->capture_default_str();
  app.add_option("--bits", cfg.bits, "fixed-point width")->capture_default_str();
  app.add_option("--term-budget", cfg.term_budget, "max individually evaluated terms per point")
      ->capture_default_str();
  app.add_option("--mode", cfg.mode, "auto | exact | fixed")->capture_default_str();
  app.add_option("--cluster-eps", cfg.cluster_eps, "linkage distance for clustering")->capture_default_str();
  app.add_flag("--timing", cfg.timing, "add wall_time to records (output is then not reproducible)");
  app.add_option("--depth", depth, "demo-cantor: ternary period (>= 10)")->capture_default_str();
  app.add_option("--count", count, "demo-cantor: orbit length")->capture_default_str();
  app.add_option("--in", in_path, "export: JSON-lines input");
  app.add_option("--format", format, "export: csv | gnuplot")->capture_default_str();

  auto* criterion = app.add_subcommand("criterion", "criterion points for a range of N");
  auto* metric = app.add_subcommand("metric", "criterion sequences at sampled parameters, pooled diagnostics");
  auto* cantor = app.add_subcommand("demo-cantor", "orbit {3^n x} of a middle-third Cantor point");
  auto* exporter = app.add_subcommand("export", "convert JSON-lines records to CSV or gnuplot data");
  auto* sampler = app.add_subcommand("sample", "print sampled parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? psl::kExitOk : psl::kExitUsage;
  }

  try {
    psl::CommandResult res;
    if (criterion->parsed()) {
      res = psl::cmd_criterion(cfg, std::cout, std::cerr);
    } else if (metric->parsed()) {
      res = psl::cmd_metric_experiment(cfg, std::cout, std::cerr);
    } else if (cantor->parsed()) {
      res = psl::cmd_demo_cantor(cfg.seed, depth, count, cfg.x, cfg.out, std::cout, std::cerr);
    } else if (exporter->parsed()) {
      if (in_path.empty()) throw std::invalid_argument("export needs --in");
      res = psl::cmd_export(in_path, format, cfg.out, std::cout);
    } else if (sampler->parsed()) {
      res = psl::cmd_sample(cfg, std::cout);
    }
    return res.exit_code;
  } catch (const psl::IOError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return psl::kExitIO;
  } catch (const psl::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return psl::kExitBudget;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return psl::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return psl::kExitIO;
  }
}
