#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmrelay/policies.hpp"
#include "mmrelay/sim.hpp"

namespace mmrelay::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The full key set for the flat key=value config format. Unknown keys are
// hard errors so that a typo cannot silently change an experiment.
inline const std::vector<std::pair<std::string, std::string>>& key_docs() {
  static const std::vector<std::pair<std::string, std::string>> docs = {
      {"slot_s", "slot duration in seconds (default 0.1)"},
      {"slots_per_frame", "slots between BS assignments (default 40)"},
      {"frames", "frames per episode (default 10)"},
      {"packet_bytes", "packet size in bytes (default 65535)"},
      {"stay_good", "P(good link stays good) (default 0.9)"},
      {"recover", "P(bad link becomes good) (default 0.1)"},
      {"ack_prob", "P(ACK | good link) (default 0.8)"},
      {"loss_cost", "delay penalty per lost packet, slot units (default 1.0)"},
      {"belief_reset", "belief assigned to a freshly selected link (default 1.0)"},
      {"blockage_gating", "geometric | global (default geometric)"},
      {"pomdp_bs_metric", "rss | throughput: chain metric for POMDP agents (default rss)"},
      {"grid_cols", "zone columns (default 10)"},
      {"grid_rows", "zone rows (default 10)"},
      {"cell_m", "zone edge length in meters (default 10)"},
      {"source_zone", "source zone index (default 0)"},
      {"dest_zone", "destination zone index (default 99)"},
      {"carrier_freq_hz", "carrier frequency (default 60e9)"},
      {"tx_power_dbm", "transmit power (default 24)"},
      {"gain_tx_db", "transmit antenna gain (default 6)"},
      {"gain_rx_db", "receive antenna gain (default 6)"},
      {"path_loss_exp", "path loss exponent (default 2.5)"},
      {"shadow_sigma_db", "log-normal shadowing std dev (default 3.5)"},
      {"noise_density_dbm_hz", "thermal noise density (default -174)"},
      {"bandwidth_hz", "channel bandwidth (default 20e6)"},
      {"ref_dist_m", "path loss reference distance (default 1)"},
      {"dynamic_counts", "comma list of dynamic obstacle counts (default 0,16,32,48,64)"},
      {"static_counts", "comma list of static obstacle counts (default 16)"},
      {"policies", "comma list of pomdp_finite,pomdp_stationary,rss,throughput"},
      {"runs", "episodes per sweep point (default 1000)"},
      {"seed", "root seed (default 1)"},
      {"jobs", "worker threads, 0 = hardware concurrency (default 0)"},
      {"tol", "stationary threshold tolerance (default 1e-9)"},
      {"max_iter", "stationary threshold backup cap (default 10000)"},
  };
  return docs;
}

struct ExperimentConfig {
  sim::SimConfig base;
  std::vector<int> dynamic_counts{0, 16, 32, 48, 64};
  std::vector<int> static_counts{16};
  std::vector<policy::PolicyKind> policies{
      policy::PolicyKind::kPomdpFinite, policy::PolicyKind::kPomdpStationary,
      policy::PolicyKind::kRssBaseline, policy::PolicyKind::kThroughputBaseline};
  int runs = 1000;
  int jobs = 0;
  double tol = 1e-9;
  int max_iter = 10000;
};

namespace detail {

inline void set_kv(std::map<std::string, std::string>& kv, const std::string& line,
                   const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(where + ": expected key=value, got '" + line + "'");
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  bool known = false;
  for (const auto& [name, doc] : key_docs()) {
    if (name == key) {
      known = true;
      break;
    }
  }
  if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  kv[key] = value;
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not a number: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("key " + key + ": not a number: '" + v + "'");
  return out;
}

inline long to_long(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not an integer: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("key " + key + ": not an integer: '" + v + "'");
  return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not an unsigned integer: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("key " + key + ": not an unsigned integer: '" + v + "'");
  return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

// Parses an optional config file plus repeatable key=value overrides.
inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      detail::set_kv(kv, line, path + ":" + std::to_string(lineno));
    }
  }
  for (const std::string& line : overrides) {
    detail::set_kv(kv, line, "--set");
  }

  ExperimentConfig cfg;
  double stay_good = 0.9, recover = 0.1, ack_prob = 0.8, loss_cost = 1.0;
  for (const auto& [key, v] : kv) {
    if (key == "slot_s") cfg.base.slot_s = detail::to_double(key, v);
    else if (key == "slots_per_frame") cfg.base.slots_per_frame = static_cast<int>(detail::to_long(key, v));
    else if (key == "frames") cfg.base.frames = static_cast<int>(detail::to_long(key, v));
    else if (key == "packet_bytes") cfg.base.packet_bytes = detail::to_long(key, v);
    else if (key == "stay_good") stay_good = detail::to_double(key, v);
    else if (key == "recover") recover = detail::to_double(key, v);
    else if (key == "ack_prob") ack_prob = detail::to_double(key, v);
    else if (key == "loss_cost") loss_cost = detail::to_double(key, v);
    else if (key == "belief_reset") cfg.base.belief_reset = detail::to_double(key, v);
    else if (key == "blockage_gating") {
      if (v == "geometric") cfg.base.gating = world::BlockageGating::kGeometric;
      else if (v == "global") cfg.base.gating = world::BlockageGating::kGlobal;
      else throw ConfigError("key blockage_gating: expected geometric or global");
    } else if (key == "pomdp_bs_metric") {
      if (v == "rss") cfg.base.pomdp_bs_metric = policy::BsMetric::kRss;
      else if (v == "throughput") cfg.base.pomdp_bs_metric = policy::BsMetric::kThroughput;
      else throw ConfigError("key pomdp_bs_metric: expected rss or throughput");
    } else if (key == "grid_cols") cfg.base.grid_cols = static_cast<int>(detail::to_long(key, v));
    else if (key == "grid_rows") cfg.base.grid_rows = static_cast<int>(detail::to_long(key, v));
    else if (key == "cell_m") cfg.base.cell_m = detail::to_double(key, v);
    else if (key == "source_zone") cfg.base.source_zone = static_cast<int>(detail::to_long(key, v));
    else if (key == "dest_zone") cfg.base.dest_zone = static_cast<int>(detail::to_long(key, v));
    else if (key == "carrier_freq_hz") cfg.base.radio.carrier_freq_hz = detail::to_double(key, v);
    else if (key == "tx_power_dbm") cfg.base.radio.tx_power_dbm = detail::to_double(key, v);
    else if (key == "gain_tx_db") cfg.base.radio.gain_tx_db = detail::to_double(key, v);
    else if (key == "gain_rx_db") cfg.base.radio.gain_rx_db = detail::to_double(key, v);
    else if (key == "path_loss_exp") cfg.base.radio.path_loss_exp = detail::to_double(key, v);
    else if (key == "shadow_sigma_db") cfg.base.radio.shadow_sigma_db = detail::to_double(key, v);
    else if (key == "noise_density_dbm_hz") cfg.base.radio.noise_density_dbm_hz = detail::to_double(key, v);
    else if (key == "bandwidth_hz") cfg.base.radio.bandwidth_hz = detail::to_double(key, v);
    else if (key == "ref_dist_m") cfg.base.radio.ref_dist_m = detail::to_double(key, v);
    else if (key == "dynamic_counts") {
      cfg.dynamic_counts.clear();
      for (const auto& item : detail::split_list(v)) {
        cfg.dynamic_counts.push_back(static_cast<int>(detail::to_long(key, item)));
      }
    } else if (key == "static_counts") {
      cfg.static_counts.clear();
      for (const auto& item : detail::split_list(v)) {
        cfg.static_counts.push_back(static_cast<int>(detail::to_long(key, item)));
      }
    } else if (key == "policies") {
      cfg.policies.clear();
      for (const auto& item : detail::split_list(v)) {
        try {
          cfg.policies.push_back(policy::parse_policy(item));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("key policies: ") + e.what());
        }
      }
    } else if (key == "runs") cfg.runs = static_cast<int>(detail::to_long(key, v));
    else if (key == "seed") cfg.base.seed = detail::to_u64(key, v);
    else if (key == "jobs") cfg.jobs = static_cast<int>(detail::to_long(key, v));
    else if (key == "tol") cfg.tol = detail::to_double(key, v);
    else if (key == "max_iter") cfg.max_iter = static_cast<int>(detail::to_long(key, v));
  }

  try {
    cfg.base.channel = pomdp::ChannelParams(stay_good, recover, ack_prob,
                                            loss_cost, cfg.base.slots_per_frame);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.dynamic_counts.empty() || cfg.static_counts.empty() || cfg.policies.empty()) {
    throw ConfigError("sweep lists must be nonempty");
  }
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  try {
    cfg.base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace mmrelay::config
