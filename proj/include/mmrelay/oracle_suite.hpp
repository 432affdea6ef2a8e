#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "mmrelay/oracles.hpp"
#include "mmrelay/pomdp.hpp"
#include "mmrelay/rng.hpp"

namespace mmrelay::oracle {

struct CheckResult {
  std::string name;
  bool pass = true;
  double max_deviation = 0.0;
  std::string detail;  // failing parameters, when any
};

struct SuiteOptions {
  std::uint64_t seed = 20250810;
  int closed_form_cases = 120;
  int structure_cases = 20;
  int structure_horizon = 20;
  int grid_cases = 5;
  int grid_n = 10000;
  int grid_horizon = 50;
  int brute_cases = 10;
  // Test hook: perturbs one solver threshold so the suite must notice.
  bool inject_fault = false;
};

namespace detail {

inline pomdp::ChannelParams sample_params(rng::Stream& st, int horizon,
                                          bool require_nontrivial) {
  for (;;) {
    const double q = 0.05 + 0.949 * st.u01();
    const double s = q * 0.95 * st.u01();
    const double k = 0.05 + 0.95 * st.u01();
    const double c = 0.25 + 4.0 * st.u01();
    if (require_nontrivial && !(k * (1.0 + q) > 1.0)) continue;
    return pomdp::ChannelParams(q, s, k, c, horizon);
  }
}

inline std::string describe(const pomdp::ChannelParams& p) {
  std::ostringstream os;
  os << "stay_good=" << p.stay_good << " recover=" << p.recover
     << " ack_prob=" << p.ack_prob << " loss_cost=" << p.loss_cost
     << " horizon=" << p.horizon;
  return os.str();
}

inline void track(CheckResult& r, double deviation, double limit,
                  const pomdp::ChannelParams& p, const std::string& what) {
  r.max_deviation = std::max(r.max_deviation, deviation);
  if (deviation > limit && r.pass) {
    r.pass = false;
    r.detail = what + " deviation " + std::to_string(deviation) + " at " +
               describe(p);
  }
}

}  // namespace detail

// Closed form for the one-backup threshold over a randomized sweep of
// parameters in the nontrivial regime k(1+q) > 1.
inline CheckResult check_closed_form(const SuiteOptions& opt) {
  CheckResult r{"closed_form_threshold"};
  rng::Stream st(rng::mix({opt.seed, rng::kParamSample, 1}));
  for (int i = 0; i < opt.closed_form_cases; ++i) {
    pomdp::ChannelParams p = detail::sample_params(st, 2, true);
    pomdp::DpSolution sol = pomdp::solve_finite(p);
    double got = sol.thresholds[0];
    if (opt.inject_fault && i == opt.closed_form_cases / 2) got += 1e-4;
    const double want = pomdp::closed_form_last_threshold(p);
    detail::track(r, std::abs(got - want), 1e-9, p, "closed form threshold");
  }
  return r;
}

// Filter facts: ACK success forces belief 1, the missing-ACK map is
// strictly increasing, and successive failures decrease to the fixed point.
inline CheckResult check_filter(const SuiteOptions& opt) {
  CheckResult r{"belief_filter"};
  rng::Stream st(rng::mix({opt.seed, rng::kParamSample, 2}));
  for (int i = 0; i < 50; ++i) {
    pomdp::ChannelParams p = detail::sample_params(st, 4, false);
    detail::track(r, std::abs(pomdp::belief_update(st.u01(), 1, p) - 1.0), 0.0,
                  p, "ack forces belief 1");
    const double b1 = st.u01(), b2 = st.u01();
    const double lo = std::min(b1, b2), hi = std::max(b1, b2);
    if (hi - lo > 1e-9) {
      const double f_lo = pomdp::belief_update(lo, 0, p);
      const double f_hi = pomdp::belief_update(hi, 0, p);
      detail::track(r, f_lo - f_hi, 0.0, p, "filter monotone in belief");
      if (f_hi > 1e-9) {  // strictness, away from the k -> 1 collapse
        detail::track(r, f_lo < f_hi ? 0.0 : 1.0, 0.0, p,
                      "filter strictly monotone in belief");
      }
    }
    // pi_1 analytic value, up to double rounding of the two expressions
    const double q = p.stay_good, k = p.ack_prob;
    const double pi1 = pomdp::belief_update(1.0, 0, p);
    detail::track(r, std::abs(pi1 - (q - q * k) / (1.0 - q * k)), 1e-15, p,
                  "pi_1 closed form");
    const double fixed = pomdp::belief_fixed_point(p);
    detail::track(r, std::abs(pomdp::belief_update(fixed, 0, p) - fixed), 1e-10,
                  p, "fixed point residual");
    if (p.stay_good < 1.0) {
      double b = 1.0;
      for (int m = 0; m < 200; ++m) {
        const double next = pomdp::belief_update(b, 0, p);
        if (std::abs(next - fixed) <= 1e-9) break;
        detail::track(r, next >= b ? next - b + 1e-30 : 0.0, 0.0, p,
                      "failure beliefs strictly decreasing");
        b = next;
      }
    }
  }
  return r;
}

// Structural facts of the finite-horizon solution on a 1001-point grid:
// concavity, pointwise monotonicity in the slot index, monotonicity of the
// continue cost in the belief, threshold monotonicity, bounds, and the
// exact threshold shape of the continue region.
inline CheckResult check_structure(const SuiteOptions& opt) {
  CheckResult r{"value_structure"};
  rng::Stream st(rng::mix({opt.seed, rng::kParamSample, 3}));
  const int grid = 1000;
  for (int i = 0; i < opt.structure_cases; ++i) {
    pomdp::ChannelParams p = detail::sample_params(st, opt.structure_horizon, false);
    pomdp::DpSolution sol = pomdp::solve_finite(p);
    const int n = p.horizon;
    for (int l = 0; l < n; ++l) {
      const pomdp::PwlValue& value = sol.values[l];
      for (int g = 0; g <= grid; ++g) {
        const double b = static_cast<double>(g) / grid;
        const double v = value.value(b);
        detail::track(r, std::max(-v, v - p.loss_cost), 1e-12, p, "value bounds");
        if (l + 1 < n) {
          detail::track(r, sol.values[l + 1].value(b) - v, 1e-9, p,
                        "value monotone in slot");
        }
        if (g >= 2) {
          const double left = value.value(b - 2.0 / grid);
          const double mid = value.value(b - 1.0 / grid);
          detail::track(r, 0.5 * (left + v) - mid, 1e-9, p, "value concavity");
        }
      }
    }
    for (int l = 0; l + 1 < n; ++l) {
      const pomdp::PwlValue& cont = sol.continue_values[l];
      double prev = cont.value(0.0);
      for (int g = 1; g <= grid; ++g) {
        const double b = static_cast<double>(g) / grid;
        const double v = cont.value(b);
        detail::track(r, v - prev, 1e-12, p, "continue cost monotone in belief");
        if (l + 2 < n) {
          detail::track(r, sol.continue_values[l + 1].value(b) - v, 1e-9, p,
                        "continue cost monotone in slot");
        }
        prev = v;
      }
      detail::track(r, sol.thresholds[l + 1] - sol.thresholds[l], 1e-12, p,
                    "threshold monotone in slot");
      // threshold shape: explore strictly below, continue at or above
      const double alpha = sol.thresholds[l];
      for (int g = 0; g <= grid; ++g) {
        const double b = static_cast<double>(g) / grid;
        const double gap = cont.value(b) - p.loss_cost;
        if (b < alpha - 1e-12) {
          detail::track(r, -gap, 1e-9, p, "explore region sign");
        } else if (b > alpha + 1e-12 && alpha < 1.0) {
          detail::track(r, gap, 1e-9, p, "continue region sign");
        }
      }
    }
    detail::track(r, std::abs(sol.thresholds[n - 1]), 0.0, p, "last slot threshold");
  }
  return r;
}

// Exact solver versus the belief-grid oracle.
inline CheckResult check_grid_oracle(const SuiteOptions& opt) {
  CheckResult r{"grid_oracle_equivalence"};
  rng::Stream st(rng::mix({opt.seed, rng::kParamSample, 4}));
  for (int i = 0; i < opt.grid_cases; ++i) {
    const int horizon = 2 + static_cast<int>(st.below(opt.grid_horizon - 1));
    pomdp::ChannelParams p = detail::sample_params(st, horizon, false);
    pomdp::DpSolution sol = pomdp::solve_finite(p);
    if (opt.inject_fault && i == 0) {
      sol.values[0] = pomdp::PwlValue({{p.loss_cost * 1.001, 0.0}});
    }
    pomdp::GridDpResult oracle = pomdp::grid_dp_oracle(p, opt.grid_n);
    for (int l = 0; l < p.horizon; ++l) {
      for (int g = 0; g <= opt.grid_n; ++g) {
        const double b = static_cast<double>(g) / opt.grid_n;
        detail::track(r, std::abs(sol.values[l].value(b) - oracle.values[l][g]),
                      1e-6, p, "grid value gap");
      }
      if (l + 1 < p.horizon) {
        detail::track(r, std::abs(sol.thresholds[l] - oracle.thresholds[l]),
                      1.0 / opt.grid_n, p, "grid threshold gap");
      }
    }
  }
  return r;
}

// Exact solver versus exhaustive policy enumeration at short horizons.
inline CheckResult check_brute_force(const SuiteOptions& opt) {
  CheckResult r{"brute_force_equivalence"};
  rng::Stream st(rng::mix({opt.seed, rng::kParamSample, 5}));
  for (int i = 0; i < opt.brute_cases; ++i) {
    pomdp::ChannelParams p = detail::sample_params(st, 3, false);
    pomdp::DpSolution sol = pomdp::solve_finite(p);
    for (double b0 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double best = pomdp::brute_force_policy_oracle(p, b0);
      detail::track(r, std::abs(best - sol.values[0].value(b0)), 1e-12, p,
                    "enumeration gap");
      // optimality: no enumerated policy may beat the solver value
      detail::track(r, sol.values[0].value(b0) - best, 1e-12, p,
                    "solver value not optimal");
    }
  }
  return r;
}

// Stationary threshold facts: the limit sits at or below every decision
// slot's threshold, equals the one-backup closed form, and the failure-run
// rule is consistent with the filter fixed point.
inline CheckResult check_stationary(const SuiteOptions& opt) {
  CheckResult r{"stationary_policy"};
  rng::Stream st(rng::mix({opt.seed, rng::kParamSample, 6}));
  for (int i = 0; i < 30; ++i) {
    pomdp::ChannelParams p = detail::sample_params(st, 12, false);
    const pomdp::StationaryThreshold stat =
        pomdp::stationary_threshold(p, 1e-9, 20000);
    pomdp::DpSolution sol = pomdp::solve_finite(p);
    for (int l = 0; l + 1 < p.horizon; ++l) {
      detail::track(r, stat.alpha_bar - sol.thresholds[l], 1e-9, p,
                    "stationary limit above a finite threshold");
    }
    detail::track(r,
                  std::abs(stat.alpha_bar - pomdp::closed_form_last_threshold(p)),
                  1e-12, p, "stationary limit vs closed form");
    const pomdp::StationaryPolicy rule = pomdp::failure_run_policy(p, stat.alpha_bar);
    if (rule.run_length) {
      detail::track(r, rule.pi.back() - stat.alpha_bar, 0.0, p,
                    "run length crossing");
      for (std::size_t m = 0; m + 1 < rule.pi.size(); ++m) {
        detail::track(r, stat.alpha_bar - rule.pi[m], 0.0, p,
                      "run length minimal");
      }
    } else {
      detail::track(r, stat.alpha_bar - rule.fixed_point, 0.0, p,
                    "unbounded run requires fixed point above threshold");
    }
    // unbounded whenever the threshold sits below the fixed point
    if (rule.fixed_point > 1e-6) {
      const pomdp::StationaryPolicy low =
          pomdp::failure_run_policy(p, rule.fixed_point * 0.5);
      detail::track(r, low.run_length ? 1.0 : 0.0, 0.0, p,
                    "expected unbounded run below fixed point");
    }
  }
  return r;
}

inline std::vector<CheckResult> run_suite(const SuiteOptions& opt) {
  return {check_closed_form(opt), check_filter(opt),   check_structure(opt),
          check_grid_oracle(opt), check_brute_force(opt), check_stationary(opt)};
}

}  // namespace mmrelay::oracle
