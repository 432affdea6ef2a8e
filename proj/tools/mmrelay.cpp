// Command-line front end: solve prints the threshold policy for a channel,
// sweep runs the obstacle experiments to CSV, oracle runs the randomized
// verification suite. Exit codes: 0 success, 1 check failure, 2 config error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmrelay/config.hpp"
#include "mmrelay/oracle_suite.hpp"
#include "mmrelay/oracles.hpp"
#include "mmrelay/pomdp.hpp"
#include "mmrelay/sweep.hpp"

namespace {

int cmd_solve(const mmrelay::config::ExperimentConfig& cfg) {
  using namespace mmrelay;
  const pomdp::ChannelParams& p = cfg.base.channel;
  std::printf("channel: stay_good=%g recover=%g ack_prob=%g loss_cost=%g horizon=%d\n",
              p.stay_good, p.recover, p.ack_prob, p.loss_cost, p.horizon);
  const double nontrivial = p.ack_prob * (1.0 + p.stay_good);
  if (nontrivial > 1.0) {
    std::printf("continue-vs-explore condition k(1+q) > 1: satisfied (%.6g)\n", nontrivial);
  } else {
    std::printf("threshold trivial: always explore-dominant condition fails "
                "(k(1+q) = %.6g <= 1)\n", nontrivial);
  }

  const pomdp::DpSolution sol = pomdp::solve_finite(p);
  std::printf("finite-horizon thresholds alpha_l:\n");
  for (int l = 0; l < sol.horizon; ++l) {
    std::printf("  l=%-3d alpha=%.12g\n", l, sol.thresholds[l]);
  }

  const pomdp::StationaryThreshold st =
      pomdp::stationary_threshold(p, cfg.tol, cfg.max_iter);
  std::printf("stationary threshold alpha_bar=%.12g (tol=%g, backups=%d)\n",
              st.alpha_bar, cfg.tol, st.backups);

  const pomdp::StationaryPolicy rule = pomdp::failure_run_policy(p, st.alpha_bar);
  std::printf("failure beliefs pi_m:");
  for (double pi : rule.pi) std::printf(" %.12g", pi);
  std::printf("\n");
  if (rule.run_length) {
    std::printf("failure run length r=%d\n", *rule.run_length);
  } else {
    std::printf("failure run length r=UNBOUNDED (fixed point b*=%.12g > alpha_bar=%.12g)\n",
                rule.fixed_point, st.alpha_bar);
  }
  return 0;
}

int cmd_sweep(const mmrelay::config::ExperimentConfig& cfg, const std::string& out,
              bool trace) {
  using namespace mmrelay;
  const std::string trace_dir = trace ? out + ".trace" : "";
  const sweep::SweepResult res = sweep::run_sweep(cfg, trace_dir);
  std::ofstream rows(out);
  if (!rows) {
    std::fprintf(stderr, "error: cannot write %s\n", out.c_str());
    return 2;
  }
  sweep::write_rows(cfg, res, rows);
  const std::string summary_path = out + ".summary.csv";
  std::ofstream summary(summary_path);
  if (!summary) {
    std::fprintf(stderr, "error: cannot write %s\n", summary_path.c_str());
    return 2;
  }
  sweep::write_summary(cfg, res, summary);
  std::printf("wrote %s and %s (%zu points x %d runs)\n", out.c_str(),
              summary_path.c_str(), res.points.size(), cfg.runs);
  return 0;
}

int cmd_oracle(const mmrelay::config::ExperimentConfig& cfg, bool inject_fault) {
  using namespace mmrelay;
  oracle::SuiteOptions opt;
  opt.seed = cfg.base.seed;
  opt.inject_fault = inject_fault;
  const std::vector<oracle::CheckResult> results = oracle::run_suite(opt);
  bool all_pass = true;
  for (const oracle::CheckResult& r : results) {
    std::printf("%-28s %s  max deviation %.3e\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.max_deviation);
    if (!r.pass) {
      std::printf("  %s\n", r.detail.c_str());
      all_pass = false;
    }
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave D2D relay-selection planner and simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out = "sweep.csv";
  bool trace = false;
  bool inject_fault = false;
  long long jobs = -1;
  unsigned long long seed = 0;
  bool seed_given = false;

  app.add_option("--config", config_path, "config file (key=value lines)");
  app.add_option("--set", sets, "override, e.g. --set runs=100 (repeatable)");

  CLI::App* solve = app.add_subcommand("solve", "print the threshold policy");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the obstacle sweep to CSV");
  sweep_cmd->add_option("--out", out, "episode CSV path (summary goes to <out>.summary.csv)");
  sweep_cmd->add_flag("--trace", trace, "write per-episode slot and obstacle traces");
  sweep_cmd->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "run the verification suite");
  auto* fault_opt = oracle_cmd->add_flag("--inject-fault", inject_fault,
                                         "test hook: perturb one solve to prove checks bite");
  fault_opt->group("");  // hidden
  for (CLI::App* sub : {solve, sweep_cmd, oracle_cmd}) {
    sub->add_option("--seed", seed, "root seed")->each([&](const std::string&) {
      seed_given = true;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    mmrelay::config::ExperimentConfig cfg =
        mmrelay::config::load_config(config_path, sets);
    if (seed_given) cfg.base.seed = seed;
    if (jobs >= 0) cfg.jobs = static_cast<int>(jobs);
    if (solve->parsed()) return cmd_solve(cfg);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, out, trace);
    if (oracle_cmd->parsed()) return cmd_oracle(cfg, inject_fault);
  } catch (const mmrelay::config::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
