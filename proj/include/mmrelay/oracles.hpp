#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mmrelay/pomdp.hpp"

namespace mmrelay::pomdp {

// Independent check of solve_finite: backward induction on a uniform
// belief grid with linear interpolation at the missing-ACK posterior.
// Nothing here shares code with the piecewise-linear solver.
struct GridDpResult {
  int grid_n = 0;
  std::vector<std::vector<double>> values;  // values[l][i], b_i = i / grid_n
  std::vector<double> thresholds;           // interpolated crossing per slot
};

inline GridDpResult grid_dp_oracle(const ChannelParams& p, int grid_n) {
  p.validate();
  if (grid_n < 100) throw std::invalid_argument("grid_dp_oracle: grid_n must be >= 100");
  const double q = p.stay_good, s = p.recover, k = p.ack_prob;
  const double c = p.loss_cost;
  const int n = p.horizon;
  const int m = grid_n + 1;
  GridDpResult out;
  out.grid_n = grid_n;
  out.values.assign(n, std::vector<double>(m, 0.0));
  out.thresholds.assign(n, 0.0);

  auto grid_b = [&](int i) { return static_cast<double>(i) / grid_n; };
  auto lerp = [&](const std::vector<double>& f, double b) {
    const double pos = b * grid_n;
    const int i = std::min(static_cast<int>(pos), grid_n - 1);
    const double frac = pos - i;
    return f[i] + frac * (f[i + 1] - f[i]);
  };

  for (int i = 0; i < m; ++i) {
    out.values[n - 1][i] = (1.0 - k * grid_b(i)) * c;
  }
  for (int l = n - 2; l >= 0; --l) {
    const std::vector<double>& next = out.values[l + 1];
    std::vector<double> cont(m, 0.0);
    for (int i = 0; i < m; ++i) {
      const double b = grid_b(i);
      const double prior = q * b + s * (1.0 - b);
      const double miss_belief =
          prior * (1.0 - k) / (1.0 - prior * k);
      cont[i] = (1.0 - k * b) * c + prior * k * next[grid_n] +
                (1.0 - prior * k) * lerp(next, miss_belief);
      out.values[l][i] = std::min(c, cont[i]);
    }
    // first grid crossing of the continue cost with the explore cost
    if (cont[grid_n] >= c) {
      out.thresholds[l] = 1.0;
    } else if (cont[0] <= c) {
      out.thresholds[l] = 0.0;
    } else {
      for (int i = 1; i < m; ++i) {
        if (cont[i] <= c) {
          const double frac = (cont[i - 1] - c) / (cont[i - 1] - cont[i]);
          out.thresholds[l] = grid_b(i - 1) + frac / grid_n;
          break;
        }
      }
    }
  }
  return out;
}

namespace detail {

// Expected cost of one fixed history-dependent policy, evaluated exactly
// on the observation tree. node indexes the policy's decision table in
// heap order: the root is 0 and the children after observing ack = 1 / 0
// are 2*node+1 / 2*node+2.
inline double policy_tree_cost(const ChannelParams& p, double belief, int l,
                               int node, unsigned explore_mask) {
  if (l == p.horizon - 1) return slot_penalty(belief, p);
  if (explore_mask >> node & 1u) return p.loss_cost;
  const double prior = p.predict(belief);
  const double ack_prob = prior * p.ack_prob;
  const double miss_belief = belief_update(belief, 0, p);
  return slot_penalty(belief, p) +
         ack_prob * policy_tree_cost(p, 1.0, l + 1, 2 * node + 1, explore_mask) +
         (1.0 - ack_prob) *
             policy_tree_cost(p, miss_belief, l + 1, 2 * node + 2, explore_mask);
}

}  // namespace detail

// Exhaustively enumerates every deterministic history-dependent policy for
// horizons up to 4 and returns the best expected cost. Exploring pays the
// flat penalty and ends the local decision problem; continuing pays the
// slot penalty and branches on the ACK. Must agree with solve_finite.
inline double brute_force_policy_oracle(const ChannelParams& p, double b0) {
  if (p.horizon > 4) throw std::invalid_argument("horizon too large for enumeration");
  const int decision_slots = p.horizon - 1;         // the last slot is forced
  const int nodes = (1 << decision_slots) - 1;      // binary observation tree
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << nodes); ++mask) {
    best = std::min(best, detail::policy_tree_cost(p, b0, 0, 0, mask));
  }
  return best;
}

// One-backup threshold in closed form, clipped to [0,1].
inline double closed_form_last_threshold(const ChannelParams& p) {
  const double q = p.stay_good, s = p.recover, k = p.ack_prob;
  const double alpha = (1.0 - k * s) / (k * (1.0 + q - s));
  return std::clamp(alpha, 0.0, 1.0);
}

}  // namespace mmrelay::pomdp
