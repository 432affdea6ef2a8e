#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mmrelay/policies.hpp"
#include "mmrelay/pomdp.hpp"
#include "mmrelay/radio.hpp"
#include "mmrelay/rng.hpp"
#include "mmrelay/world.hpp"

namespace mmrelay::sim {

struct SimConfig {
  double slot_s = 0.1;
  int slots_per_frame = 40;
  int frames = 10;
  long packet_bytes = 65535;
  int grid_cols = 10;
  int grid_rows = 10;
  double cell_m = 10.0;
  int static_count = 16;
  int dynamic_count = 0;
  int source_zone = 0;
  int dest_zone = 99;
  policy::PolicyKind kind = policy::PolicyKind::kPomdpFinite;
  pomdp::ChannelParams channel{0.9, 0.1, 0.8, 1.0, 40};
  radio::RadioParams radio;
  std::uint64_t seed = 1;
  world::BlockageGating gating = world::BlockageGating::kGeometric;
  double belief_reset = 1.0;
  // metric the BS uses to seed the POMDP agents' chain each frame
  policy::BsMetric pomdp_bs_metric = policy::BsMetric::kRss;

  void validate() const {
    if (slot_s <= 0.0 || slots_per_frame < 2 || frames < 1 || packet_bytes < 1) {
      throw std::invalid_argument("sim config: counts must be positive");
    }
    if (channel.horizon != slots_per_frame) {
      throw std::invalid_argument("sim config: channel horizon must equal slots_per_frame");
    }
    channel.validate();
  }
};

// Per-episode counters. Totals equal the sums of the per-hop arrays; the
// hop of a slot is the packet's position in the chain at that moment.
struct EpisodeStats {
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_lost = 0;
  std::uint64_t exploration_slots = 0;
  std::uint64_t stalled_slots = 0;
  std::uint64_t transmit_slots = 0;
  std::uint64_t hops_traversed = 0;  // summed over delivered packets
  double total_delay_s = 0.0;
  double delay_sq_sum_s2 = 0.0;
  std::vector<std::uint64_t> per_hop_transmit;
  std::vector<std::uint64_t> per_hop_lost;
  std::vector<std::uint64_t> per_hop_explore;
  std::vector<std::uint64_t> per_hop_stall;

  bool operator==(const EpisodeStats&) const = default;

  double loss_per_delivered() const {
    return static_cast<double>(packets_lost) /
           static_cast<double>(std::max<std::uint64_t>(packets_delivered, 1));
  }
  double e2e_delay_per_packet_s() const {
    return total_delay_s /
           static_cast<double>(std::max<std::uint64_t>(packets_delivered, 1));
  }
  double mean_hops() const {
    return static_cast<double>(hops_traversed) /
           static_cast<double>(std::max<std::uint64_t>(packets_delivered, 1));
  }
  double loss_per_delivered_per_hop() const {
    const double h = mean_hops();
    return h > 0.0 ? loss_per_delivered() / h : 0.0;
  }
  double e2e_delay_per_packet_per_hop_s() const {
    const double h = mean_hops();
    return h > 0.0 ? e2e_delay_per_packet_s() / h : 0.0;
  }
};

struct TraceSinks {
  std::ostream* events = nullptr;     // frame,slot,hop,action,x,z,belief_before,belief_after
  std::ostream* obstacles = nullptr;  // slot,obstacle_id,cell_x,cell_y
};

// Immutable per-policy precomputation, shared read-only across episodes.
struct PolicyContext {
  std::shared_ptr<const pomdp::DpSolution> dp;
  std::shared_ptr<const pomdp::StationaryPolicy> stationary;
};

inline PolicyContext make_policy_context(const SimConfig& cfg, double tol = 1e-9,
                                         int max_iter = 10000) {
  PolicyContext ctx;
  if (policy::is_pomdp(cfg.kind)) {
    ctx.dp = std::make_shared<const pomdp::DpSolution>(
        pomdp::solve_finite(cfg.channel));
    const pomdp::StationaryThreshold st =
        pomdp::stationary_threshold(cfg.channel, tol, max_iter);
    ctx.stationary = std::make_shared<const pomdp::StationaryPolicy>(
        pomdp::failure_run_policy(cfg.channel, st.alpha_bar));
  }
  return ctx;
}

inline int ack_draw(bool state_good, double ack_prob, double uniform) {
  return state_good && uniform < ack_prob ? 1 : 0;
}

namespace detail {

inline void bump(std::vector<std::uint64_t>& v, int hop) {
  if (hop >= static_cast<int>(v.size())) v.resize(hop + 1, 0);
  ++v[hop];
}

}  // namespace detail

inline EpisodeStats run_episode(const SimConfig& cfg, const PolicyContext& ctx,
                                TraceSinks* trace = nullptr) {
  cfg.validate();
  const int n = cfg.slots_per_frame;
  const double k = cfg.channel.ack_prob;
  const std::uint64_t seed = cfg.seed;

  world::GridWorld w = world::build_world(
      {cfg.grid_cols, cfg.grid_rows, cfg.cell_m, cfg.static_count,
       cfg.dynamic_count, cfg.source_zone, cfg.dest_zone},
      seed);
  rng::Stream obstacle_walk(rng::mix({seed, rng::kObstaclePath}));

  // Every draw is keyed by (seed, purpose, slot, link[, obstacle]), so the
  // whole environment is a fixed function of the seed: policies sharing a
  // seed see identical worlds (common random numbers).
  auto shadow_at = [&](std::int64_t slot, int i, int j) {
    rng::Stream st(rng::mix({seed, rng::kShadow, static_cast<std::uint64_t>(slot),
                             static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(j)}));
    return st.normal(cfg.radio.shadow_sigma_db);
  };
  auto coin_at = [&](std::int64_t slot, int i, int j) {
    return [=, &cfg](int obstacle) {
      rng::Stream st(rng::mix({cfg.seed, rng::kBlockCoin,
                               static_cast<std::uint64_t>(slot),
                               static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(j),
                               static_cast<std::uint64_t>(obstacle)}));
      return st.u01();
    };
  };
  auto ack_uniform = [&](std::int64_t slot, int i, int j) {
    rng::Stream st(rng::mix({seed, rng::kAck, static_cast<std::uint64_t>(slot),
                             static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(j)}));
    return st.u01();
  };

  const policy::BsMetric bs_metric =
      cfg.kind == policy::PolicyKind::kRssBaseline ? policy::BsMetric::kRss
      : cfg.kind == policy::PolicyKind::kThroughputBaseline
          ? policy::BsMetric::kThroughput
          : cfg.pomdp_bs_metric;

  // A zone can relay onward when some viable next hop is not statically
  // walled; switching toward anything else strands the packet.
  std::vector<std::uint8_t> routable(w.zone_count(), 0);
  for (int zone = 0; zone < w.zone_count(); ++zone) {
    if (zone == cfg.dest_zone) {
      routable[zone] = 1;
      continue;
    }
    for (int cand : world::viable_relays(zone, w).candidates) {
      if (!world::statically_blocked(zone, cand, w)) {
        routable[zone] = 1;
        break;
      }
    }
  }

  EpisodeStats stats;
  struct Packet {
    int zone;
    int hops = 0;
    std::int64_t first_tx_slot = -1;
  };

  for (int f = 0; f < cfg.frames; ++f) {
    // Stale snapshot: obstacle positions entering the frame, with channel
    // draws keyed to the last slot of the previous frame.
    const std::int64_t stale_slot = static_cast<std::int64_t>(f) * n - 1;
    world::GridWorld snapshot = w;
    auto stale = [&](int i, int j) {
      policy::StaleLink link;
      link.static_blocked = world::statically_blocked(i, j, snapshot);
      link.blocked = link.static_blocked ||
                     world::link_blocked(i, j, snapshot, cfg.gating,
                                         coin_at(stale_slot, i, j));
      const radio::LinkBudget lb = radio::link_budget(
          snapshot.zone_distance(i, j), shadow_at(stale_slot, i, j), cfg.radio);
      link.rx_power_dbm = lb.rx_power_dbm;
      link.capacity_bps = lb.capacity_bps;
      return link;
    };

    const std::optional<std::vector<int>> chain =
        policy::bs_global_assign(w, stale, bs_metric);
    std::unordered_map<int, int> next_hop;
    if (chain) {
      for (std::size_t i = 0; i + 1 < chain->size(); ++i) {
        next_hop[(*chain)[i]] = (*chain)[i + 1];
      }
    }
    // Lazy extension for zones reached only after a local switch: one more
    // greedy step from the same stale snapshot (no chain bottleneck, clear
    // links first, transiently blocked ones as a last resort).
    auto route_from = [&](int zone) -> int {
      auto it = next_hop.find(zone);
      if (it != next_hop.end()) return it->second;
      const world::ViableRelaySet viable = world::viable_relays(zone, w);
      int best = -1;
      bool best_clear = false;
      double best_value = -std::numeric_limits<double>::infinity();
      for (int cand : viable.candidates) {
        if (!routable[cand]) continue;
        const policy::StaleLink link = stale(zone, cand);
        if (link.static_blocked) continue;
        const double value = bs_metric == policy::BsMetric::kRss
                                 ? link.rx_power_dbm
                                 : link.capacity_bps;
        const bool clear = !link.blocked;
        if ((clear && !best_clear) || (clear == best_clear && value > best_value)) {
          best_clear = clear;
          best_value = value;
          best = cand;
        }
      }
      if (best >= 0) next_hop[zone] = best;
      return best;
    };

    std::unordered_map<int, int> relay_override;  // local switches, this frame
    Packet packet{cfg.source_zone};
    policy::AgentState agent;
    bool agent_valid = false;
    // A relay picked by a live probe is established by the end of the
    // exploration slot: its first transmission sees the verified unblocked
    // state (fading is still drawn fresh).
    bool link_established = false;

    for (int l = 0; l < n; ++l) {
      const std::int64_t g = static_cast<std::int64_t>(f) * n + l;
      if (trace && trace->obstacles) {
        for (std::size_t o = 0; o < w.dynamic_cells.size(); ++o) {
          *trace->obstacles << g << ',' << o << ',' << w.cell_x(w.dynamic_cells[o])
                            << ',' << w.cell_y(w.dynamic_cells[o]) << '\n';
        }
      }
      if (!chain) {
        ++stats.stalled_slots;
        detail::bump(stats.per_hop_stall, packet.hops);
        if (trace && trace->events) {
          *trace->events << f << ',' << l << ',' << packet.hops
                         << ",stall,-1,-1,0,0\n";
        }
        world::step_dynamic_obstacles(w, obstacle_walk);
        continue;
      }
      if (!agent_valid) {
        agent = policy::AgentState{};
        agent.zone = packet.zone;
        auto ov = relay_override.find(packet.zone);
        agent.relay = ov != relay_override.end() ? ov->second
                                                 : route_from(packet.zone);
        agent.belief = cfg.belief_reset;
        agent_valid = true;
      }
      agent.slot_index = l;
      if (agent.relay < 0) {
        ++stats.stalled_slots;
        detail::bump(stats.per_hop_stall, packet.hops);
        if (trace && trace->events) {
          *trace->events << f << ',' << l << ',' << packet.hops
                         << ",stall,-1,-1," << agent.belief << ','
                         << agent.belief << '\n';
        }
        world::step_dynamic_obstacles(w, obstacle_walk);
        continue;
      }

      const policy::LocalAction action = policy::local_decide(
          agent, cfg.kind, ctx.dp.get(), ctx.stationary.get());
      if (action == policy::LocalAction::kExplore) {
        ++stats.exploration_slots;
        detail::bump(stats.per_hop_explore, packet.hops);
        const double belief_before = agent.belief;
        auto probe = [&](int cand) -> std::optional<double> {
          if (!routable[cand]) return std::nullopt;
          if (world::link_blocked(agent.zone, cand, w, cfg.gating,
                                  coin_at(g, agent.zone, cand))) {
            return std::nullopt;
          }
          return radio::link_budget(w.zone_distance(agent.zone, cand),
                                    shadow_at(g, agent.zone, cand), cfg.radio)
              .rx_power_dbm;
        };
        if (policy::explore_select(agent, w, probe, cfg.belief_reset)) {
          relay_override[agent.zone] = agent.relay;
        }
        if (trace && trace->events) {
          *trace->events << f << ',' << l << ',' << packet.hops
                         << ",explore,-1,-1," << belief_before << ','
                         << agent.belief << '\n';
        }
      } else {
        ++stats.transmit_slots;
        detail::bump(stats.per_hop_transmit, packet.hops);
        if (packet.first_tx_slot < 0) packet.first_tx_slot = g;
        const bool good = world::true_link_state(
            agent.zone, agent.relay, w, cfg.radio, cfg.packet_bytes, cfg.slot_s,
            cfg.gating, coin_at(g, agent.zone, agent.relay),
            shadow_at(g, agent.zone, agent.relay));
        const int z = ack_draw(good, k, ack_uniform(g, agent.zone, agent.relay));
        const double belief_before = agent.belief;
        policy::on_ack(agent, z, cfg.channel);
        if (trace && trace->events) {
          *trace->events << f << ',' << l << ',' << packet.hops << ",transmit,"
                         << (good ? 1 : 0) << ',' << z << ',' << belief_before
                         << ',' << agent.belief << '\n';
        }
        if (good) {
          const int arrived = agent.relay;
          packet.zone = arrived;
          ++packet.hops;
          agent_valid = false;  // the next holder starts its own link episode
          if (arrived == cfg.dest_zone) {
            ++stats.packets_delivered;
            stats.hops_traversed += packet.hops;
            const double delay =
                static_cast<double>(g - packet.first_tx_slot + 1) * cfg.slot_s;
            stats.total_delay_s += delay;
            stats.delay_sq_sum_s2 += delay * delay;
            packet = Packet{cfg.source_zone};
          }
        } else {
          ++stats.packets_lost;
          detail::bump(stats.per_hop_lost, packet.hops);
        }
      }
      world::step_dynamic_obstacles(w, obstacle_walk);
    }
  }
  return stats;
}

inline EpisodeStats run_episode(const SimConfig& cfg) {
  const PolicyContext ctx = make_policy_context(cfg);
  return run_episode(cfg, ctx);
}

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double ci95_half = 0.0;
};

// Episode-level summary plus pooled ratio estimates. The pooled loss and
// delay treat episodes as clusters (ratio estimator with a delta-method
// confidence interval), which stays meaningful when some episodes deliver
// nothing.
struct AggregateSummary {
  std::size_t episodes = 0;
  bool single_episode = false;  // CI half-widths reported as 0
  MetricSummary loss_per_delivered;
  MetricSummary e2e_delay_per_packet_s;
  MetricSummary loss_per_delivered_per_hop;
  MetricSummary e2e_delay_per_packet_per_hop_s;
  double pooled_loss_per_delivered = 0.0;
  double pooled_loss_ci95 = 0.0;
  double pooled_delay_per_packet_s = 0.0;
  double pooled_delay_ci95 = 0.0;
  std::uint64_t delivered_total = 0;
  std::uint64_t lost_total = 0;
  std::uint64_t exploration_total = 0;
  std::uint64_t stalled_total = 0;
};

namespace detail {

template <typename Get>
MetricSummary summarize(std::span<const EpisodeStats> eps, Get get) {
  MetricSummary m;
  const std::size_t n = eps.size();
  double sum = 0.0;
  for (const auto& e : eps) sum += get(e);
  m.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double sq = 0.0;
    for (const auto& e : eps) {
      const double d = get(e) - m.mean;
      sq += d * d;
    }
    m.stddev = std::sqrt(sq / static_cast<double>(n - 1));
    m.ci95_half = 1.96 * m.stddev / std::sqrt(static_cast<double>(n));
  }
  return m;
}

inline std::pair<double, double> pooled_ratio(std::span<const EpisodeStats> eps,
                                              const std::function<double(const EpisodeStats&)>& num) {
  double x_sum = 0.0, y_sum = 0.0;
  for (const auto& e : eps) {
    x_sum += static_cast<double>(e.packets_delivered);
    y_sum += num(e);
  }
  if (x_sum <= 0.0) return {0.0, 0.0};
  const double ratio = y_sum / x_sum;
  const std::size_t n = eps.size();
  if (n < 2) return {ratio, 0.0};
  double resid_sq = 0.0;
  for (const auto& e : eps) {
    const double r = num(e) - ratio * static_cast<double>(e.packets_delivered);
    resid_sq += r * r;
  }
  const double se =
      std::sqrt(resid_sq * static_cast<double>(n) / static_cast<double>(n - 1)) /
      x_sum;
  return {ratio, 1.96 * se};
}

}  // namespace detail

inline AggregateSummary aggregate(std::span<const EpisodeStats> eps) {
  if (eps.empty()) throw std::invalid_argument("aggregate: empty input");
  AggregateSummary out;
  out.episodes = eps.size();
  out.single_episode = eps.size() == 1;
  out.loss_per_delivered =
      detail::summarize(eps, [](const EpisodeStats& e) { return e.loss_per_delivered(); });
  out.e2e_delay_per_packet_s =
      detail::summarize(eps, [](const EpisodeStats& e) { return e.e2e_delay_per_packet_s(); });
  out.loss_per_delivered_per_hop = detail::summarize(
      eps, [](const EpisodeStats& e) { return e.loss_per_delivered_per_hop(); });
  out.e2e_delay_per_packet_per_hop_s = detail::summarize(
      eps, [](const EpisodeStats& e) { return e.e2e_delay_per_packet_per_hop_s(); });
  auto [loss_ratio, loss_ci] = detail::pooled_ratio(
      eps, [](const EpisodeStats& e) { return static_cast<double>(e.packets_lost); });
  out.pooled_loss_per_delivered = loss_ratio;
  out.pooled_loss_ci95 = loss_ci;
  auto [delay_ratio, delay_ci] = detail::pooled_ratio(
      eps, [](const EpisodeStats& e) { return e.total_delay_s; });
  out.pooled_delay_per_packet_s = delay_ratio;
  out.pooled_delay_ci95 = delay_ci;
  for (const auto& e : eps) {
    out.delivered_total += e.packets_delivered;
    out.lost_total += e.packets_lost;
    out.exploration_total += e.exploration_slots;
    out.stalled_total += e.stalled_slots;
  }
  return out;
}

}  // namespace mmrelay::sim
