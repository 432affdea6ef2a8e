#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmrelay/pomdp.hpp"
#include "mmrelay/world.hpp"

namespace mmrelay::policy {

enum class PolicyKind {
  kPomdpFinite,      // per-slot belief thresholds
  kPomdpStationary,  // switch after r successive ACK failures
  kRssBaseline,      // frame-boundary reselection on received signal strength
  kThroughputBaseline,  // frame-boundary reselection on bottleneck capacity
};

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kPomdpFinite: return "pomdp_finite";
    case PolicyKind::kPomdpStationary: return "pomdp_stationary";
    case PolicyKind::kRssBaseline: return "rss";
    case PolicyKind::kThroughputBaseline: return "throughput";
  }
  return "?";
}

inline PolicyKind parse_policy(const std::string& name) {
  if (name == "pomdp_finite") return PolicyKind::kPomdpFinite;
  if (name == "pomdp_stationary") return PolicyKind::kPomdpStationary;
  if (name == "rss") return PolicyKind::kRssBaseline;
  if (name == "throughput") return PolicyKind::kThroughputBaseline;
  throw std::invalid_argument("unknown policy: " + name);
}

inline bool is_pomdp(PolicyKind k) {
  return k == PolicyKind::kPomdpFinite || k == PolicyKind::kPomdpStationary;
}

enum class LocalAction { kContinue, kExplore };

// Per-link decision state of the transmitting node. The belief always
// equals the filter folded over the ACKs seen since the last switch.
struct AgentState {
  int zone = 0;
  int relay = -1;
  double belief = 1.0;
  int consecutive_failures = 0;
  int slot_index = 0;
};

inline LocalAction local_decide(const AgentState& agent, PolicyKind kind,
                                const pomdp::DpSolution* dp,
                                const pomdp::StationaryPolicy* stationary) {
  switch (kind) {
    case PolicyKind::kPomdpFinite:
      return agent.belief >= dp->thresholds[agent.slot_index]
                 ? LocalAction::kContinue
                 : LocalAction::kExplore;
    case PolicyKind::kPomdpStationary:
      if (stationary->run_length &&
          agent.consecutive_failures >= *stationary->run_length) {
        return LocalAction::kExplore;
      }
      return LocalAction::kContinue;
    default:
      return LocalAction::kContinue;  // baselines only re-select at frame boundaries
  }
}

inline void on_ack(AgentState& agent, int ack, const pomdp::ChannelParams& p) {
  agent.belief = pomdp::belief_update(agent.belief, ack, p);
  agent.consecutive_failures = ack ? 0 : agent.consecutive_failures + 1;
  ++agent.slot_index;
}

// Stale view of one link as recorded at the end of the previous frame.
// static_blocked marks permanent geometry (a static obstacle cell on the
// segment); blocked is the full snapshot truth including dynamic obstacles.
struct StaleLink {
  bool blocked = false;
  bool static_blocked = false;
  double rx_power_dbm = 0.0;
  double capacity_bps = 0.0;
};

using StaleFn = std::function<StaleLink(int from, int to)>;

enum class BsMetric { kRss, kThroughput };

inline double baseline_metric(BsMetric metric, const StaleLink& link,
                              double chain_bottleneck_bps) {
  if (link.blocked) return -std::numeric_limits<double>::infinity();
  if (metric == BsMetric::kRss) return link.rx_power_dbm;
  return std::min(chain_bottleneck_bps, link.capacity_bps);
}

// Greedy hop-by-hop chain construction from stale channel state, as the
// base station would do at a frame boundary. Statically walled candidates
// are no candidates at all; a transiently blocked link ranks behind every
// clear one and is taken only when nothing clear remains. The walk prefers
// the best candidate at each hop (ties to the lowest zone index) and
// backtracks out of dead ends, so a frame stalls only when the stale view
// offers no route at all.
inline std::optional<std::vector<int>> bs_global_assign(
    const world::GridWorld& w, const StaleFn& stale, BsMetric metric) {
  struct Node {
    int zone;
    double bottleneck;
    std::vector<int> order;  // remaining candidates, best first
    std::size_t next = 0;
  };
  std::vector<std::uint8_t> visited(w.zone_count(), 0);

  auto expand = [&](int zone, double bottleneck) {
    Node node{zone, bottleneck, {}, 0};
    struct Scored {
      int cand;
      bool clear;
      double value;
    };
    std::vector<Scored> scored;
    for (int cand : world::viable_relays(zone, w).candidates) {
      if (visited[cand]) continue;
      const StaleLink link = stale(zone, cand);
      if (link.static_blocked) continue;
      const double value = metric == BsMetric::kRss
                               ? link.rx_power_dbm
                               : std::min(bottleneck, link.capacity_bps);
      scored.push_back({cand, !link.blocked, value});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) {
                       if (a.clear != b.clear) return a.clear;
                       return a.value > b.value;
                     });
    node.order.reserve(scored.size());
    for (const Scored& s : scored) node.order.push_back(s.cand);
    return node;
  };

  std::vector<Node> stack;
  visited[w.source_zone] = 1;
  stack.push_back(expand(w.source_zone, std::numeric_limits<double>::infinity()));
  while (!stack.empty()) {
    Node& top = stack.back();
    if (top.next >= top.order.size()) {
      stack.pop_back();
      continue;
    }
    const int cand = top.order[top.next++];
    if (visited[cand]) continue;
    visited[cand] = 1;
    if (cand == w.dest_zone) {
      std::vector<int> chain;
      chain.reserve(stack.size() + 1);
      for (const Node& n : stack) chain.push_back(n.zone);
      chain.push_back(cand);
      return chain;
    }
    const StaleLink link = stale(top.zone, cand);
    stack.push_back(expand(cand, std::min(top.bottleneck, link.capacity_bps)));
  }
  return std::nullopt;
}

// One-slot local probe: measure instantaneous received power on every
// viable candidate and switch to the strongest unblocked one (ties to the
// lowest zone index). probe(j) is empty when the candidate is blocked.
// Returns false when everything is blocked; the slot is spent either way.
inline bool explore_select(
    AgentState& agent, const world::GridWorld& w,
    const std::function<std::optional<double>(int)>& probe,
    double belief_reset) {
  const world::ViableRelaySet viable = world::viable_relays(agent.zone, w);
  int best = -1;
  double best_rss = -std::numeric_limits<double>::infinity();
  for (int cand : viable.candidates) {
    const std::optional<double> rss = probe(cand);
    if (rss && *rss > best_rss) {
      best_rss = *rss;
      best = cand;
    }
  }
  if (best < 0) return false;
  agent.relay = best;
  agent.belief = belief_reset;
  agent.consecutive_failures = 0;
  return true;
}

}  // namespace mmrelay::policy
