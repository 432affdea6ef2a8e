#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mmrelay/config.hpp"
#include "mmrelay/sim.hpp"

namespace mmrelay::sweep {

inline const char* kRowHeader =
    "policy,D,static,seed,packets_delivered,packets_lost,exploration_slots,"
    "stalled_slots,total_delay_s,hops,loss_per_delivered,e2e_delay_per_packet_s,"
    "loss_per_delivered_per_hop,e2e_delay_per_packet_per_hop_s";

// Fixed float formatting so reruns with the same seed are byte-identical.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct SweepPoint {
  int static_count = 0;
  int dynamic_count = 0;
  policy::PolicyKind kind;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<std::vector<sim::EpisodeStats>> episodes;  // per point, by run
};

// The episode seed depends on the sweep point's world parameters and the
// run index but never on the policy, so compared policies see identical
// obstacle trajectories and channel draws.
inline std::uint64_t episode_seed(std::uint64_t root, int static_count,
                                  int dynamic_count, int run) {
  return rng::mix({root, rng::kEpisode, static_cast<std::uint64_t>(static_count),
                   static_cast<std::uint64_t>(dynamic_count),
                   static_cast<std::uint64_t>(run)});
}

inline SweepResult run_sweep(const config::ExperimentConfig& cfg,
                             const std::string& trace_dir = "") {
  SweepResult out;
  for (int st : cfg.static_counts) {
    for (int d : cfg.dynamic_counts) {
      for (policy::PolicyKind kind : cfg.policies) {
        out.points.push_back({st, d, kind});
      }
    }
  }
  out.episodes.assign(out.points.size(), {});
  for (auto& v : out.episodes) v.resize(cfg.runs);

  std::map<policy::PolicyKind, sim::PolicyContext> contexts;
  for (policy::PolicyKind kind : cfg.policies) {
    if (!contexts.count(kind)) {
      sim::SimConfig probe = cfg.base;
      probe.kind = kind;
      contexts[kind] = sim::make_policy_context(probe, cfg.tol, cfg.max_iter);
    }
  }
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);

  const std::size_t total = out.points.size() * static_cast<std::size_t>(cfg.runs);
  std::atomic<std::size_t> next{0};
  const unsigned jobs = cfg.jobs > 0
                            ? static_cast<unsigned>(cfg.jobs)
                            : std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&]() {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      const std::size_t point = task / cfg.runs;
      const int run = static_cast<int>(task % cfg.runs);
      const SweepPoint& sp = out.points[point];
      sim::SimConfig ep = cfg.base;
      ep.kind = sp.kind;
      ep.static_count = sp.static_count;
      ep.dynamic_count = sp.dynamic_count;
      ep.seed = episode_seed(cfg.base.seed, sp.static_count, sp.dynamic_count, run);
      if (!trace_dir.empty()) {
        const std::string stem = trace_dir + "/" + policy::to_string(sp.kind) +
                                 "_D" + std::to_string(sp.dynamic_count) + "_S" +
                                 std::to_string(sp.static_count) + "_run" +
                                 std::to_string(run);
        std::ofstream events(stem + ".events.csv");
        std::ofstream obstacles(stem + ".obstacles.csv");
        events << "frame,slot,hop,action,x,z,belief_before,belief_after\n";
        obstacles << "slot,obstacle_id,cell_x,cell_y\n";
        sim::TraceSinks sinks{&events, &obstacles};
        out.episodes[point][run] = sim::run_episode(ep, contexts[sp.kind], &sinks);
      } else {
        out.episodes[point][run] = sim::run_episode(ep, contexts[sp.kind]);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i + 1 < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

// One CSV row per episode, in (static, D, policy, run) order.
inline void write_rows(const config::ExperimentConfig& cfg,
                       const SweepResult& res, std::ostream& os) {
  os << kRowHeader << '\n';
  for (std::size_t point = 0; point < res.points.size(); ++point) {
    const SweepPoint& sp = res.points[point];
    for (int run = 0; run < cfg.runs; ++run) {
      const sim::EpisodeStats& e = res.episodes[point][run];
      const std::uint64_t seed =
          episode_seed(cfg.base.seed, sp.static_count, sp.dynamic_count, run);
      os << policy::to_string(sp.kind) << ',' << sp.dynamic_count << ','
         << sp.static_count << ',' << seed << ',' << e.packets_delivered << ','
         << e.packets_lost << ',' << e.exploration_slots << ','
         << e.stalled_slots << ',' << fmt(e.total_delay_s) << ','
         << e.hops_traversed << ',' << fmt(e.loss_per_delivered()) << ','
         << fmt(e.e2e_delay_per_packet_s()) << ','
         << fmt(e.loss_per_delivered_per_hop()) << ','
         << fmt(e.e2e_delay_per_packet_per_hop_s()) << '\n';
    }
  }
}

inline void write_summary(const config::ExperimentConfig& cfg,
                          const SweepResult& res, std::ostream& os) {
  os << "policy,D,static,runs,"
        "loss_per_delivered_mean,loss_per_delivered_std,loss_per_delivered_ci95,"
        "e2e_delay_per_packet_s_mean,e2e_delay_per_packet_s_std,e2e_delay_per_packet_s_ci95,"
        "loss_per_delivered_per_hop_mean,e2e_delay_per_packet_per_hop_s_mean,"
        "pooled_loss_per_delivered,pooled_loss_ci95,"
        "pooled_e2e_delay_per_packet_s,pooled_delay_ci95,"
        "delivered_total,lost_total,exploration_total,stalled_total\n";
  for (std::size_t point = 0; point < res.points.size(); ++point) {
    const SweepPoint& sp = res.points[point];
    const sim::AggregateSummary agg = sim::aggregate(res.episodes[point]);
    os << policy::to_string(sp.kind) << ',' << sp.dynamic_count << ','
       << sp.static_count << ',' << cfg.runs << ','
       << fmt(agg.loss_per_delivered.mean) << ','
       << fmt(agg.loss_per_delivered.stddev) << ','
       << fmt(agg.loss_per_delivered.ci95_half) << ','
       << fmt(agg.e2e_delay_per_packet_s.mean) << ','
       << fmt(agg.e2e_delay_per_packet_s.stddev) << ','
       << fmt(agg.e2e_delay_per_packet_s.ci95_half) << ','
       << fmt(agg.loss_per_delivered_per_hop.mean) << ','
       << fmt(agg.e2e_delay_per_packet_per_hop_s.mean) << ','
       << fmt(agg.pooled_loss_per_delivered) << ','
       << fmt(agg.pooled_loss_ci95) << ','
       << fmt(agg.pooled_delay_per_packet_s) << ','
       << fmt(agg.pooled_delay_ci95) << ','
       << agg.delivered_total << ',' << agg.lost_total << ','
       << agg.exploration_total << ',' << agg.stalled_total << '\n';
  }
}

}  // namespace mmrelay::sweep
