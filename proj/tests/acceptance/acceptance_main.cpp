// Acceptance suite: one line per criterion, nonzero exit on any failure.
// argv[1] (optional) is the CLI binary, used by the determinism criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmrelay/config.hpp"
#include "mmrelay/matched.hpp"
#include "mmrelay/oracle_suite.hpp"
#include "mmrelay/oracles.hpp"
#include "mmrelay/pomdp.hpp"
#include "mmrelay/rng.hpp"
#include "mmrelay/sweep.hpp"

using namespace mmrelay;

namespace {

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<bool(std::string&)> run;
};

bool g_all_pass = true;

void run_criterion(const Criterion& c) {
  std::string detail;
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  try {
    pass = c.run(detail);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (elapsed > c.limit_s) {
    pass = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time limit");
  }
  std::printf("%s  [%d] %-28s %6.2f s (limit %g s)%s%s\n",
              pass ? "PASS" : "FAIL", c.id, c.name.c_str(), elapsed, c.limit_s,
              detail.empty() ? "" : "  -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) g_all_pass = false;
}

// ---- criterion 1: closed-form threshold ---------------------------------

bool crit_closed_form(std::string& detail) {
  rng::Stream st(rng::mix({424242, rng::kParamSample}));
  double max_dev = 0.0;
  for (int i = 0; i < 150; ++i) {
    double q, s, k;
    do {
      q = 0.05 + 0.949 * st.u01();
      s = q * 0.95 * st.u01();
      k = 0.05 + 0.95 * st.u01();
    } while (!(k * (1.0 + q) > 1.0));
    const pomdp::ChannelParams p(q, s, k, 0.25 + 4.0 * st.u01(), 2);
    const pomdp::DpSolution sol = pomdp::solve_finite(p);
    const double want = pomdp::closed_form_last_threshold(p);
    max_dev = std::max(max_dev, std::abs(sol.thresholds[0] - want));
  }
  std::ostringstream os;
  os << "150 channels, max dev " << max_dev;
  detail = os.str();
  return max_dev <= 1e-9;
}

// ---- criterion 2: structure suite ----------------------------------------

bool crit_structure(std::string& detail) {
  oracle::SuiteOptions opt;
  opt.seed = 31337;
  opt.structure_cases = 20;
  opt.structure_horizon = 20;
  const oracle::CheckResult r = oracle::check_structure(opt);
  std::ostringstream os;
  os << "20 channels at horizon 20, max dev " << r.max_deviation;
  if (!r.pass) os << "; " << r.detail;
  detail = os.str();
  return r.pass;
}

// ---- criterion 3: oracle equivalence --------------------------------------

bool crit_oracles(std::string& detail) {
  double max_value_gap = 0.0;
  rng::Stream st(rng::mix({515151, rng::kParamSample}));
  // grid oracle at the full 1e4 grid, horizons up to 50
  for (int horizon : {50, 17, 5}) {
    const double q = 0.05 + 0.949 * st.u01();
    const double s = q * 0.95 * st.u01();
    const double k = 0.05 + 0.95 * st.u01();
    const pomdp::ChannelParams p(q, s, k, 1.0, horizon);
    const pomdp::DpSolution sol = pomdp::solve_finite(p);
    const pomdp::GridDpResult oracle = pomdp::grid_dp_oracle(p, 10000);
    for (int l = 0; l < horizon; ++l) {
      for (int g = 0; g <= 10000; ++g) {
        const double gap =
            std::abs(sol.values[l].value(g / 10000.0) - oracle.values[l][g]);
        max_value_gap = std::max(max_value_gap, gap);
      }
    }
  }
  if (max_value_gap > 1e-6) {
    detail = "grid value gap " + std::to_string(max_value_gap);
    return false;
  }
  // exhaustive enumeration at horizon 3
  double max_enum_gap = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double q = 0.05 + 0.949 * st.u01();
    const double s = q * 0.95 * st.u01();
    const double k = 0.05 + 0.95 * st.u01();
    const pomdp::ChannelParams p(q, s, k, 1.0, 3);
    const pomdp::DpSolution sol = pomdp::solve_finite(p);
    for (double b0 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double best = pomdp::brute_force_policy_oracle(p, b0);
      max_enum_gap =
          std::max(max_enum_gap, std::abs(best - sol.values[0].value(b0)));
      if (sol.values[0].value(b0) > best + 1e-12) {
        detail = "an enumerated policy beat the solver";
        return false;
      }
    }
  }
  std::ostringstream os;
  os << "grid gap " << max_value_gap << ", enumeration gap " << max_enum_gap;
  detail = os.str();
  return max_enum_gap <= 1e-12;
}

// ---- criterion 4: filter and failure-run facts ----------------------------

bool crit_filter(std::string& detail) {
  rng::Stream st(rng::mix({616161, rng::kParamSample}));
  double max_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double q = 0.05 + 0.949 * st.u01();
    const double s = q * 0.95 * st.u01();
    const double k = 0.05 + 0.95 * st.u01();
    const pomdp::ChannelParams p(q, s, k, 1.0, 10);
    // analytic first failure belief, up to double rounding
    const double pi1 = pomdp::belief_update(1.0, 0, p);
    max_dev = std::max(max_dev, std::abs(pi1 - (q - q * k) / (1.0 - q * k)));
    if (max_dev > 1e-15) {
      detail = "pi_1 mismatch " + std::to_string(max_dev);
      return false;
    }
    // quadratic fixed point and strict decrease toward it
    const double fixed = pomdp::belief_fixed_point(p);
    const double a2 = k * (q - s), a1 = -(1.0 - k * s - (q - s) * (1.0 - k)),
                 a0 = s * (1.0 - k);
    if (std::abs(a2 * fixed * fixed + a1 * fixed + a0) > 1e-10) {
      detail = "fixed point quadratic residual";
      return false;
    }
    double b = 1.0;
    for (int m = 0; m < 100; ++m) {
      const double next = pomdp::belief_update(b, 0, p);
      if (std::abs(next - fixed) <= 1e-9) break;
      if (next >= b) {
        detail = "failure beliefs not strictly decreasing";
        return false;
      }
      b = next;
    }
    // UNBOUNDED exactly when the threshold sits below the fixed point
    if (fixed > 1e-9) {
      const pomdp::StationaryPolicy below =
          pomdp::failure_run_policy(p, fixed * 0.25);
      if (below.run_length) {
        detail = "expected UNBOUNDED below the fixed point";
        return false;
      }
    }
    const pomdp::StationaryPolicy above =
        pomdp::failure_run_policy(p, std::min(1.0, fixed + 0.2));
    if (!above.run_length) {
      detail = "expected a bounded run above the fixed point";
      return false;
    }
  }
  std::ostringstream os;
  os << "100 channels, pi_1 dev " << max_dev;
  detail = os.str();
  return true;
}

// ---- criterion 5: matched-channel Monte Carlo -----------------------------

bool crit_matched(std::string& detail) {
  const pomdp::ChannelParams p(0.9, 0.1, 0.8, 1.0, 10);
  const pomdp::DpSolution dp = pomdp::solve_finite(p);
  const std::uint64_t frames = 100000;
  const sim::MatchedChannelStats finite = sim::matched_channel_cost(
      p, sim::LocalRule::kFiniteThresholds, &dp, 0, frames, 2025);
  const sim::MatchedChannelStats switch1 = sim::matched_channel_cost(
      p, sim::LocalRule::kFailureRun, nullptr, 1, frames, 2025);
  const sim::MatchedChannelStats always = sim::matched_channel_cost(
      p, sim::LocalRule::kAlwaysContinue, nullptr, 0, frames, 2025);
  std::ostringstream os;
  os << "finite " << finite.mean_cost << "+-" << finite.ci95_half << ", switch1 "
     << switch1.mean_cost << "+-" << switch1.ci95_half << ", always "
     << always.mean_cost << "+-" << always.ci95_half;
  detail = os.str();
  const bool beats_switch1 =
      finite.mean_cost + finite.ci95_half < switch1.mean_cost - switch1.ci95_half;
  const bool beats_always =
      finite.mean_cost + finite.ci95_half < always.mean_cost - always.ci95_half;
  return beats_switch1 && beats_always;
}

// ---- criteria 6 and 7: sweep trends ---------------------------------------

struct PointStats {
  double loss = 0.0, loss_ci = 0.0;
  double delay = 0.0, delay_ci = 0.0;
};

std::map<std::pair<int, policy::PolicyKind>, PointStats> sweep_points(
    const config::ExperimentConfig& cfg, bool by_static) {
  const sweep::SweepResult res = sweep::run_sweep(cfg);
  std::map<std::pair<int, policy::PolicyKind>, PointStats> out;
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const sweep::SweepPoint& sp = res.points[i];
    const sim::AggregateSummary agg = sim::aggregate(res.episodes[i]);
    PointStats ps;
    ps.loss = agg.pooled_loss_per_delivered;
    ps.loss_ci = agg.pooled_loss_ci95;
    ps.delay = agg.pooled_delay_per_packet_s;
    ps.delay_ci = agg.pooled_delay_ci95;
    const int key = by_static ? sp.static_count : sp.dynamic_count;
    out[{key, sp.kind}] = ps;
  }
  return out;
}

bool non_decreasing_within_ci(const std::vector<double>& v,
                              const std::vector<double>& ci) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (v[i + 1] < v[i] && v[i] - ci[i] > v[i + 1] + ci[i + 1]) return false;
  }
  return true;
}

bool crit_dynamic_trend(std::string& detail) {
  config::ExperimentConfig cfg = config::load_config("", {});
  cfg.runs = 1000;
  const std::vector<int> sweep_d = cfg.dynamic_counts;
  const auto points = sweep_points(cfg, false);

  std::ostringstream os;
  for (policy::PolicyKind kind : cfg.policies) {
    std::vector<double> loss, loss_ci, delay, delay_ci;
    for (int d : sweep_d) {
      const PointStats& ps = points.at({d, kind});
      loss.push_back(ps.loss);
      loss_ci.push_back(ps.loss_ci);
      delay.push_back(ps.delay);
      delay_ci.push_back(ps.delay_ci);
    }
    if (!non_decreasing_within_ci(loss, loss_ci)) {
      detail = std::string("loss not non-decreasing in D for ") +
               policy::to_string(kind);
      return false;
    }
    if (!non_decreasing_within_ci(delay, delay_ci)) {
      detail = std::string("delay not non-decreasing in D for ") +
               policy::to_string(kind);
      return false;
    }
  }
  for (int d : sweep_d) {
    for (policy::PolicyKind agent :
         {policy::PolicyKind::kPomdpFinite, policy::PolicyKind::kPomdpStationary}) {
      for (policy::PolicyKind base :
           {policy::PolicyKind::kRssBaseline, policy::PolicyKind::kThroughputBaseline}) {
        const PointStats& a = points.at({d, agent});
        const PointStats& b = points.at({d, base});
        if (a.loss > b.loss + 1e-12 || a.delay > b.delay + 1e-12) {
          std::ostringstream bad;
          bad << policy::to_string(agent) << " above " << policy::to_string(base)
              << " at D=" << d << " (loss " << a.loss << " vs " << b.loss
              << ", delay " << a.delay << " vs " << b.delay << ")";
          detail = bad.str();
          return false;
        }
      }
    }
  }
  const PointStats& lo = points.at({sweep_d.front(), policy::PolicyKind::kPomdpFinite});
  const PointStats& hi = points.at({sweep_d.back(), policy::PolicyKind::kPomdpFinite});
  os << "pomdp_finite loss " << lo.loss << " -> " << hi.loss << ", delay "
     << lo.delay << " -> " << hi.delay << " s over D";
  detail = os.str();
  return true;
}

bool crit_static_trend(std::string& detail) {
  config::ExperimentConfig cfg =
      config::load_config("", {"dynamic_counts=0", "static_counts=0,4,8,12,16"});
  cfg.runs = 1000;
  const auto points = sweep_points(cfg, true);
  std::ostringstream os;
  for (policy::PolicyKind kind : cfg.policies) {
    std::vector<double> delay, delay_ci;
    for (int s : cfg.static_counts) {
      const PointStats& ps = points.at({s, kind});
      delay.push_back(ps.delay);
      delay_ci.push_back(ps.delay_ci);
    }
    if (!non_decreasing_within_ci(delay, delay_ci)) {
      detail = std::string("delay not non-decreasing in statics for ") +
               policy::to_string(kind);
      return false;
    }
    if (kind == policy::PolicyKind::kPomdpFinite) {
      os << "pomdp_finite delay " << delay.front() << " -> " << delay.back()
         << " s over statics";
    }
  }
  detail = os.str();
  return true;
}

// ---- criterion 8: determinism and common random numbers --------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool crit_determinism(const std::string& cli, std::string& detail) {
  namespace fs = std::filesystem;
  const std::string dir = "acceptance_tmp";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string common_args =
      " --set runs=2 --set frames=2 --set slots_per_frame=12"
      " --set dynamic_counts=0,16 --set static_counts=8"
      " --set policies=pomdp_finite,rss --set seed=4242 sweep --trace --out ";
  const std::string out_a = dir + "/a.csv";
  const std::string out_b = dir + "/b.csv";
  if (std::system((cli + common_args + out_a + " > /dev/null").c_str()) != 0 ||
      std::system((cli + common_args + out_b + " > /dev/null").c_str()) != 0) {
    detail = "sweep subcommand failed";
    return false;
  }
  if (read_file(out_a).empty() || read_file(out_a) != read_file(out_b)) {
    detail = "episode CSVs differ between identical runs";
    return false;
  }
  if (read_file(out_a + ".summary.csv") != read_file(out_b + ".summary.csv")) {
    detail = "summary CSVs differ between identical runs";
    return false;
  }
  // common random numbers: obstacle traces match across policies
  for (int run : {0, 1}) {
    const std::string finite = read_file(out_a + ".trace/pomdp_finite_D16_S8_run" +
                                         std::to_string(run) + ".obstacles.csv");
    const std::string rss = read_file(out_a + ".trace/rss_D16_S8_run" +
                                      std::to_string(run) + ".obstacles.csv");
    if (finite.empty() || finite != rss) {
      detail = "obstacle traces differ across policies at run " + std::to_string(run);
      return false;
    }
  }
  detail = "CSV byte-identical, obstacle traces shared across policies";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  std::vector<Criterion> criteria = {
      {1, "closed-form threshold", 1.0, crit_closed_form},
      {2, "structure suite", 10.0, crit_structure},
      {3, "oracle equivalence", 30.0, crit_oracles},
      {4, "filter and failure runs", 1.0, crit_filter},
      {5, "matched-channel policies", 120.0, crit_matched},
      {6, "dynamic obstacle trends", 900.0, crit_dynamic_trend},
      {7, "static obstacle trend", 600.0, crit_static_trend},
      {8, "determinism and CRN", 120.0,
       [&cli](std::string& detail) {
         if (cli.empty()) {
           detail = "no CLI binary path given";
           return false;
         }
         return crit_determinism(cli, detail);
       }},
  };
  for (const Criterion& c : criteria) run_criterion(c);
  return g_all_pass ? 0 : 1;
}
