#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "mmrelay/pomdp.hpp"
#include "mmrelay/rng.hpp"

namespace mmrelay::sim {

// Synthetic single-link harness: the channel state evolves exactly by the
// model's transition probabilities and ACKs by its sensor probability, so
// the local rules can be compared on the cost scale the planner optimizes
// (one loss_cost per missing ACK, one per exploration slot). Exploring
// lands on a fresh good link with belief reset to 1.
enum class LocalRule {
  kFiniteThresholds,
  kFailureRun,
  kAlwaysContinue,
};

struct MatchedChannelStats {
  double mean_cost = 0.0;
  double stddev = 0.0;
  double ci95_half = 0.0;
  std::uint64_t frames = 0;
};

inline MatchedChannelStats matched_channel_cost(
    const pomdp::ChannelParams& p, LocalRule rule,
    const pomdp::DpSolution* dp, int failure_run, std::uint64_t frames,
    std::uint64_t seed) {
  p.validate();
  if (rule == LocalRule::kFiniteThresholds && dp == nullptr) {
    throw std::invalid_argument("matched_channel_cost: finite rule needs a solution");
  }
  if (rule == LocalRule::kFailureRun && failure_run < 1) {
    throw std::invalid_argument("matched_channel_cost: failure run must be >= 1");
  }
  const int n = p.horizon;
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t f = 0; f < frames; ++f) {
    rng::Stream st(rng::mix({seed, rng::kMatchedChannel, f}));
    bool good = true;
    double belief = 1.0;
    int fails = 0;
    double cost = 0.0;
    for (int l = 0; l < n; ++l) {
      bool explore = false;
      switch (rule) {
        case LocalRule::kFiniteThresholds:
          explore = belief < dp->thresholds[l];
          break;
        case LocalRule::kFailureRun:
          explore = fails >= failure_run;
          break;
        case LocalRule::kAlwaysContinue:
          break;
      }
      if (explore) {
        cost += p.loss_cost;
        good = true;
        belief = 1.0;
        fails = 0;
        continue;
      }
      const int z = (good && st.u01() < p.ack_prob) ? 1 : 0;
      if (z == 0) cost += p.loss_cost;
      belief = pomdp::belief_update(belief, z, p);
      fails = z ? 0 : fails + 1;
      good = st.u01() < (good ? p.stay_good : p.recover);
    }
    sum += cost;
    sum_sq += cost * cost;
  }
  MatchedChannelStats out;
  out.frames = frames;
  const double m = static_cast<double>(frames);
  out.mean_cost = sum / m;
  if (frames > 1) {
    out.stddev = std::sqrt((sum_sq - m * out.mean_cost * out.mean_cost) / (m - 1.0));
    out.ci95_half = 1.96 * out.stddev / std::sqrt(m);
  }
  return out;
}

}  // namespace mmrelay::sim
