#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmrelay::radio {

inline constexpr double kSpeedOfLight = 299792458.0;

// 60 GHz directional link defaults: 24 dBm transmit power, 6 dB antenna
// gains, log-distance path loss with exponent 2.5, 3.5 dB log-normal
// shadowing, -174 dBm/Hz thermal noise over 20 MHz.
struct RadioParams {
  double carrier_freq_hz = 60e9;
  double tx_power_dbm = 24.0;
  double gain_tx_db = 6.0;
  double gain_rx_db = 6.0;
  double path_loss_exp = 2.5;
  double shadow_sigma_db = 3.5;
  double noise_density_dbm_hz = -174.0;
  double bandwidth_hz = 20e6;
  double ref_dist_m = 1.0;
};

// Log-distance path loss with a free-space intercept at the reference
// distance (about 68 dB at 1 m for 60 GHz).
inline double path_loss_db(double dist_m, const RadioParams& p) {
  if (!(dist_m > 0.0)) throw std::invalid_argument("path_loss_db: distance must be > 0");
  const double intercept = 20.0 * std::log10(4.0 * std::numbers::pi * p.ref_dist_m *
                                              p.carrier_freq_hz / kSpeedOfLight);
  return intercept + 10.0 * p.path_loss_exp * std::log10(dist_m / p.ref_dist_m);
}

struct LinkBudget {
  double distance_m = 0.0;
  double shadow_db = 0.0;
  double rx_power_dbm = 0.0;
  double snr = 0.0;            // linear ratio
  double capacity_bps = 0.0;   // Shannon capacity
};

inline LinkBudget link_budget(double dist_m, double shadow_db,
                              const RadioParams& p) {
  LinkBudget lb;
  lb.distance_m = dist_m;
  lb.shadow_db = shadow_db;
  lb.rx_power_dbm = p.tx_power_dbm + p.gain_tx_db + p.gain_rx_db -
                    path_loss_db(dist_m, p) + shadow_db;
  const double noise_dbm =
      p.noise_density_dbm_hz + 10.0 * std::log10(p.bandwidth_hz);
  lb.snr = std::pow(10.0, (lb.rx_power_dbm - noise_dbm) / 10.0);
  lb.capacity_bps = p.bandwidth_hz * std::log2(1.0 + lb.snr);
  return lb;
}

// True when one slot is long enough to carry one packet at this capacity.
inline bool slot_supports_packet(const LinkBudget& lb, long packet_bytes,
                                 double slot_s) {
  if (!(slot_s > 0.0)) throw std::invalid_argument("slot_supports_packet: slot must be > 0");
  return lb.capacity_bps * slot_s >= 8.0 * static_cast<double>(packet_bytes);
}

}  // namespace mmrelay::radio
