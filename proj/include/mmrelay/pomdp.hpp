#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmrelay::pomdp {

// Two-state link model. A good link stays good with probability stay_good,
// a bad link recovers with probability recover, and an ACK comes back with
// probability ack_prob when the link is good (never when it is bad).
// loss_cost is the delay penalty of one lost packet, equal by assumption to
// the cost of one exploration slot. horizon is the number of local slots
// between consecutive base-station assignments.
struct ChannelParams {
  double stay_good;
  double recover;
  double ack_prob;
  double loss_cost;
  int horizon;

  ChannelParams(double stay_good_, double recover_, double ack_prob_,
                double loss_cost_, int horizon_)
      : stay_good(stay_good_),
        recover(recover_),
        ack_prob(ack_prob_),
        loss_cost(loss_cost_),
        horizon(horizon_) {
    validate();
  }

  void validate() const {
    if (!(recover >= 0.0)) throw std::invalid_argument("channel: recover must satisfy recover >= 0");
    if (!(recover < stay_good)) throw std::invalid_argument("channel: must satisfy recover < stay_good");
    if (!(stay_good <= 1.0)) throw std::invalid_argument("channel: stay_good must satisfy stay_good <= 1");
    if (!(ack_prob > 0.0 && ack_prob <= 1.0)) throw std::invalid_argument("channel: ack_prob must satisfy 0 < ack_prob <= 1");
    if (!(loss_cost > 0.0)) throw std::invalid_argument("channel: loss_cost must satisfy loss_cost > 0");
    if (horizon < 2) throw std::invalid_argument("channel: horizon must satisfy horizon >= 2");
  }

  // One-step prior that the link is good next slot, given current belief.
  double predict(double belief) const {
    return stay_good * belief + recover * (1.0 - belief);
  }
};

// Bayes filter for the belief that the link is good. An ACK certifies the
// good state; a missing ACK shifts mass toward bad through the predicted
// prior and the miss likelihood.
inline double belief_update(double belief, int ack, const ChannelParams& p) {
  if (ack != 0) return 1.0;
  const double prior = p.predict(belief);
  const double denom = 1.0 - prior * p.ack_prob;
  if (denom <= 0.0) return 0.0;  // only reachable in measure-zero corners
  return prior * (1.0 - p.ack_prob) / denom;
}

// Expected delay penalty of transmitting once at the given belief.
inline double slot_penalty(double belief, const ChannelParams& p) {
  return (1.0 - p.ack_prob * belief) * p.loss_cost;
}

// One linear piece of a value function: offset + slope * b.
struct LinearPiece {
  double offset;
  double slope;

  double value_at(double b) const { return offset + slope * b; }
};

// Piecewise-linear concave function on [0,1], stored as the lower envelope
// of its pieces in activation order (slope strictly decreasing from left
// to right). Pieces whose attaining interval is shorter than kPieceTol are
// pruned.
class PwlValue {
 public:
  static constexpr double kPieceTol = 1e-12;

  PwlValue() = default;
  explicit PwlValue(std::vector<LinearPiece> envelope_pieces)
      : pieces_(std::move(envelope_pieces)) {}

  static PwlValue lower_envelope(std::vector<LinearPiece> pieces) {
    if (pieces.empty()) throw std::invalid_argument("no pieces");
    std::sort(pieces.begin(), pieces.end(),
              [](const LinearPiece& a, const LinearPiece& b) {
                if (a.slope != b.slope) return a.slope > b.slope;
                return a.offset < b.offset;
              });
    std::vector<LinearPiece> env;
    std::vector<double> start;
    for (const LinearPiece& piece : pieces) {
      bool dominated = false;
      double x = 0.0;
      while (!env.empty()) {
        const LinearPiece& back = env.back();
        const double dslope = back.slope - piece.slope;
        if (dslope <= 1e-15 * (1.0 + std::abs(back.slope))) {
          // effectively parallel: the one with the lower offset wins
          if (piece.offset >= back.offset) {
            dominated = true;
            break;
          }
          env.pop_back();
          start.pop_back();
          continue;
        }
        x = (piece.offset - back.offset) / dslope;
        if (x <= start.back() + kPieceTol) {
          env.pop_back();
          start.pop_back();
          continue;
        }
        break;
      }
      if (dominated) continue;
      if (env.empty()) {
        env.push_back(piece);
        start.push_back(0.0);
      } else if (x < 1.0 - kPieceTol) {
        env.push_back(piece);
        start.push_back(x);
      }
    }
    return PwlValue(std::move(env));
  }

  double value(double b) const {
    double best = pieces_.front().value_at(b);
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      best = std::min(best, pieces_[i].value_at(b));
    }
    return best;
  }

  const std::vector<LinearPiece>& pieces() const { return pieces_; }

  // Left endpoints of each piece's attaining interval.
  std::vector<double> activation_starts() const {
    std::vector<double> starts(pieces_.size(), 0.0);
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      const LinearPiece& a = pieces_[i - 1];
      const LinearPiece& b = pieces_[i];
      starts[i] = (b.offset - a.offset) / (a.slope - b.slope);
    }
    return starts;
  }

 private:
  std::vector<LinearPiece> pieces_;
};

// Last-slot expected cost: a single linear piece (1 - ack_prob * b) * C.
inline PwlValue terminal_value(const ChannelParams& p) {
  return PwlValue({{p.loss_cost, -p.ack_prob * p.loss_cost}});
}

struct BackupResult {
  PwlValue continue_cost;  // expected cost of transmitting this slot
  PwlValue value;          // min of continue_cost and the flat explore cost
};

// One exact backward step. Each piece (offset, slope) of the next slot's
// value maps to a piece that is linear in the current belief, because the
// missing-ACK posterior enters only through the predicted prior, which is
// itself linear in b. The linear head term collects the slot penalty and
// the ACK branch, whose continuation value is pinned at belief 1.
inline BackupResult dp_backup(const PwlValue& next_value,
                              const ChannelParams& p) {
  const double q = p.stay_good, s = p.recover, k = p.ack_prob;
  const double c = p.loss_cost;
  const double next_at_one = next_value.value(1.0);
  const double head_offset = c + s * k * next_at_one;
  const double head_slope = -k * c + (q - s) * k * next_at_one;
  std::vector<LinearPiece> mapped;
  mapped.reserve(next_value.pieces().size());
  for (const LinearPiece& piece : next_value.pieces()) {
    const double tail_offset =
        piece.offset * (1.0 - s * k) + piece.slope * s * (1.0 - k);
    const double tail_slope =
        (q - s) * (piece.slope * (1.0 - k) - piece.offset * k);
    mapped.push_back({head_offset + tail_offset, head_slope + tail_slope});
  }
  PwlValue cont = PwlValue::lower_envelope(std::move(mapped));
  std::vector<LinearPiece> with_explore = cont.pieces();
  with_explore.push_back({c, 0.0});
  PwlValue value = PwlValue::lower_envelope(std::move(with_explore));
  return {std::move(cont), std::move(value)};
}

// Belief cutoff where the continue cost crosses the flat explore cost.
// The continue cost is non-increasing in b, so the crossing is unique;
// ties go to continuing.
inline double threshold_of(const PwlValue& continue_cost, double explore_cost) {
  if (continue_cost.value(1.0) >= explore_cost) return 1.0;
  if (continue_cost.value(0.0) <= explore_cost) return 0.0;
  const auto& pieces = continue_cost.pieces();
  const std::vector<double> starts = continue_cost.activation_starts();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const double end = (i + 1 < pieces.size()) ? starts[i + 1] : 1.0;
    if (pieces[i].value_at(end) <= explore_cost) {
      if (pieces[i].value_at(starts[i]) <= explore_cost) return starts[i];
      if (pieces[i].slope >= -1e-15) return starts[i];
      return (explore_cost - pieces[i].offset) / pieces[i].slope;
    }
  }
  return 1.0;  // unreachable for a non-increasing envelope
}

// Full finite-horizon plan: values[l] and thresholds[l] for l = 0..N-1,
// continue_values[l] for l = 0..N-2. The last slot offers no explore
// decision, so its threshold is fixed at 0 (always continue).
struct DpSolution {
  int horizon = 0;
  std::vector<PwlValue> values;
  std::vector<PwlValue> continue_values;
  std::vector<double> thresholds;
};

inline DpSolution solve_finite(const ChannelParams& p) {
  p.validate();
  const int n = p.horizon;
  DpSolution out;
  out.horizon = n;
  out.values.resize(n);
  out.continue_values.resize(n - 1);
  out.thresholds.assign(n, 0.0);
  out.values[n - 1] = terminal_value(p);
  for (int l = n - 2; l >= 0; --l) {
    BackupResult step = dp_backup(out.values[l + 1], p);
    out.thresholds[l] = threshold_of(step.continue_cost, p.loss_cost);
    out.continue_values[l] = std::move(step.continue_cost);
    out.values[l] = std::move(step.value);
  }
  return out;
}

struct StationaryThreshold {
  double alpha_bar = 0.0;
  int backups = 0;
};

// Time-invariant threshold for the long-horizon rule. The per-slot
// thresholds are non-increasing in the slot index, so along any horizon
// they settle onto their smallest value, the one reached at the final
// decision slot; the backup iteration is run until consecutive thresholds
// agree to within tol and the smallest threshold seen is returned. (The
// backup iterates themselves grow away from that limit toward the
// degenerate explore-everywhere cutoff of 1, which would collapse the
// failure-run rule to a single failure.)
inline StationaryThreshold stationary_threshold(const ChannelParams& p,
                                                double tol, int max_iter) {
  p.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("stationary_threshold: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("stationary_threshold: max_iter must be >= 1");
  PwlValue value = terminal_value(p);
  std::optional<double> prev;
  double alpha = 0.0;
  double smallest = 1.0;
  for (int iter = 1; iter <= max_iter; ++iter) {
    BackupResult step = dp_backup(value, p);
    alpha = threshold_of(step.continue_cost, p.loss_cost);
    smallest = std::min(smallest, alpha);
    if (prev && std::abs(alpha - *prev) < tol) return {smallest, iter};
    prev = alpha;
    value = std::move(step.value);
  }
  std::ostringstream msg;
  msg << "stationary threshold did not converge within " << max_iter
      << " backups; last thresholds " << *prev << " and " << alpha;
  throw std::runtime_error(msg.str());
}

// Fixed point of the missing-ACK filter map in [0, 1): the belief that
// repeated ACK failures converge to. Solves the quadratic implied by
// b = Phi(b, 0) and falls back to bisection if the closed form misbehaves.
inline double belief_fixed_point(const ChannelParams& p) {
  const double q = p.stay_good, s = p.recover, k = p.ack_prob;
  const double a2 = k * (q - s);
  const double a1 = -(1.0 - k * s - (q - s) * (1.0 - k));
  const double a0 = s * (1.0 - k);
  auto filter_gap = [&](double b) { return belief_update(b, 0, p) - b; };
  if (a2 > 0.0) {
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc >= 0.0) {
      const double root = (-a1 - std::sqrt(disc)) / (2.0 * a2);
      if (root >= 0.0 && root <= 1.0 && std::abs(filter_gap(root)) <= 1e-9) {
        return root;
      }
    }
  }
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (filter_gap(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Stationary rule extracted from the threshold: switch after run_length
// successive ACK failures. run_length is empty when the failure beliefs
// never reach alpha_bar (they stall at the filter fixed point above it).
struct StationaryPolicy {
  double alpha_bar = 0.0;
  std::optional<int> run_length;
  std::vector<double> pi;  // beliefs after 1, 2, ... successive failures
  double fixed_point = 0.0;
};

inline StationaryPolicy failure_run_policy(const ChannelParams& p,
                                           double alpha_bar) {
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
    throw std::invalid_argument("failure_run_policy: alpha_bar must be in [0,1]");
  }
  StationaryPolicy out;
  out.alpha_bar = alpha_bar;
  out.fixed_point = belief_fixed_point(p);
  double belief = 1.0;
  for (int m = 1; m <= 1000000; ++m) {
    const double next = belief_update(belief, 0, p);
    out.pi.push_back(next);
    if (next <= alpha_bar) {
      out.run_length = m;
      return out;
    }
    if (std::abs(next - out.fixed_point) <= 1e-12 || next >= belief - 1e-15) {
      return out;  // stalled above alpha_bar: unbounded run
    }
    belief = next;
  }
  return out;
}

}  // namespace mmrelay::pomdp
