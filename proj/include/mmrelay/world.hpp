#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mmrelay/radio.hpp"
#include "mmrelay/rng.hpp"

namespace mmrelay::world {

enum class BlockageGating {
  kGeometric,  // a dynamic obstacle matters only when its cell meets the segment
  kGlobal,     // every dynamic obstacle flips a coin against every link
};

struct WorldParams {
  int cols = 10;
  int rows = 10;
  double cell_m = 10.0;
  int static_count = 16;
  int dynamic_count = 0;
  int source_zone = 0;
  int dest_zone = 99;
};

// Zone grid with static obstacle cells and random-walking dynamic
// obstacles. Zones are indexed row-major; a zone's UEs sit at its center.
struct GridWorld {
  int cols = 0;
  int rows = 0;
  double cell_m = 0.0;
  int source_zone = 0;
  int dest_zone = 0;
  std::vector<int> static_cells;        // sorted, distinct
  std::vector<std::uint8_t> static_mask;  // per-zone lookup
  std::vector<int> dynamic_cells;       // one entry per obstacle

  int zone_count() const { return cols * rows; }
  int cell_x(int zone) const { return zone % cols; }
  int cell_y(int zone) const { return zone / cols; }
  double center_x(int zone) const { return (cell_x(zone) + 0.5) * cell_m; }
  double center_y(int zone) const { return (cell_y(zone) + 0.5) * cell_m; }

  double zone_distance(int a, int b) const {
    const double dx = center_x(a) - center_x(b);
    const double dy = center_y(a) - center_y(b);
    return std::sqrt(dx * dx + dy * dy);
  }

  // Squared center distance; exact in doubles for lattice coordinates, so
  // "strictly closer" comparisons are deterministic.
  double zone_distance_sq(int a, int b) const {
    const double dx = center_x(a) - center_x(b);
    const double dy = center_y(a) - center_y(b);
    return dx * dx + dy * dy;
  }
};

inline GridWorld build_world(const WorldParams& wp, std::uint64_t seed) {
  if (wp.cols < 1 || wp.rows < 1) throw std::invalid_argument("build_world: empty grid");
  const int zones = wp.cols * wp.rows;
  if (wp.source_zone == wp.dest_zone) throw std::invalid_argument("build_world: source equals dest");
  if (wp.source_zone < 0 || wp.source_zone >= zones || wp.dest_zone < 0 ||
      wp.dest_zone >= zones) {
    throw std::invalid_argument("build_world: endpoint zone out of range");
  }
  if (wp.static_count > zones - 2) throw std::invalid_argument("build_world: obstacle count >= free cells");

  GridWorld w;
  w.cols = wp.cols;
  w.rows = wp.rows;
  w.cell_m = wp.cell_m;
  w.source_zone = wp.source_zone;
  w.dest_zone = wp.dest_zone;
  w.static_mask.assign(zones, 0);

  // uniform placement without replacement, excluding the endpoints
  std::vector<int> free_cells;
  free_cells.reserve(zones - 2);
  for (int z = 0; z < zones; ++z) {
    if (z != wp.source_zone && z != wp.dest_zone) free_cells.push_back(z);
  }
  rng::Stream st(rng::mix({seed, rng::kStaticPlacement}));
  for (int i = 0; i < wp.static_count; ++i) {
    const std::size_t j = i + st.below(free_cells.size() - i);
    std::swap(free_cells[i], free_cells[j]);
    w.static_cells.push_back(free_cells[i]);
    w.static_mask[free_cells[i]] = 1;
  }
  std::sort(w.static_cells.begin(), w.static_cells.end());

  rng::Stream dyn(rng::mix({seed, rng::kDynamicPlacement}));
  for (int i = 0; i < wp.dynamic_count; ++i) {
    w.dynamic_cells.push_back(static_cast<int>(dyn.below(zones)));
  }
  return w;
}

// Each dynamic obstacle moves uniformly among its neighboring cells or
// stays, clipped to the grid; one step per slot.
inline void step_dynamic_obstacles(GridWorld& w, rng::Stream& st) {
  for (int& cell : w.dynamic_cells) {
    const int cx = w.cell_x(cell);
    const int cy = w.cell_y(cell);
    int options[9];
    int count = 0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = cx + dx;
        const int ny = cy + dy;
        if (nx < 0 || nx >= w.cols || ny < 0 || ny >= w.rows) continue;
        options[count++] = ny * w.cols + nx;
      }
    }
    cell = options[st.below(count)];
  }
}

// Closed-cell segment test with a small tolerance: grazing a cell edge or
// corner counts as intersecting.
inline bool segment_intersects_cell(double x0, double y0, double x1, double y1,
                                    double xmin, double ymin, double xmax,
                                    double ymax, double eps = 1e-9) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = x1 - x0, dy = y1 - y0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {x0 - (xmin - eps), (xmax + eps) - x0,
                       y0 - (ymin - eps), (ymax + eps) - y0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
  }
  return t0 <= t1;
}

inline bool segment_hits_zone(const GridWorld& w, int from, int to, int cell) {
  const double c = w.cell_m;
  return segment_intersects_cell(
      w.center_x(from), w.center_y(from), w.center_x(to), w.center_y(to),
      w.cell_x(cell) * c, w.cell_y(cell) * c, (w.cell_x(cell) + 1) * c,
      (w.cell_y(cell) + 1) * c);
}

inline bool statically_blocked(int from, int to, const GridWorld& w) {
  for (int cell : w.static_cells) {
    if (segment_hits_zone(w, from, to, cell)) return true;
  }
  return false;
}

// A link is blocked when a static obstacle cell meets the segment, or when
// any dynamic obstacle's fair coin lands on blocking this slot. coin(i)
// must yield the obstacle's uniform draw for this slot and link.
inline bool link_blocked(int from, int to, const GridWorld& w,
                         BlockageGating gating,
                         const std::function<double(int)>& coin) {
  if (from == to) throw std::invalid_argument("link_blocked: identical endpoints");
  if (statically_blocked(from, to, w)) return true;
  for (std::size_t i = 0; i < w.dynamic_cells.size(); ++i) {
    if (gating == BlockageGating::kGeometric &&
        !segment_hits_zone(w, from, to, w.dynamic_cells[i])) {
      continue;
    }
    if (coin(static_cast<int>(i)) < 0.5) return true;
  }
  return false;
}

// Candidate next hops for a zone: within two rings, strictly closer to the
// destination, and not a static obstacle cell. Sorted by zone index.
struct ViableRelaySet {
  int owner = 0;
  std::vector<int> candidates;
};

inline ViableRelaySet viable_relays(int zone, const GridWorld& w) {
  ViableRelaySet out;
  out.owner = zone;
  const double own_d2 = w.zone_distance_sq(zone, w.dest_zone);
  const int cx = w.cell_x(zone);
  const int cy = w.cell_y(zone);
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = cx + dx;
      const int ny = cy + dy;
      if (nx < 0 || nx >= w.cols || ny < 0 || ny >= w.rows) continue;
      const int cand = ny * w.cols + nx;
      if (w.static_mask[cand]) continue;
      if (w.zone_distance_sq(cand, w.dest_zone) < own_d2) {
        out.candidates.push_back(cand);
      }
    }
  }
  return out;
}

// Ground-truth link state for one slot: good when the link is unblocked
// and the shadowed budget still carries one packet in one slot.
inline bool true_link_state(int from, int to, const GridWorld& w,
                            const radio::RadioParams& rp, long packet_bytes,
                            double slot_s, BlockageGating gating,
                            const std::function<double(int)>& coin,
                            double shadow_db) {
  if (link_blocked(from, to, w, gating, coin)) return false;
  const radio::LinkBudget lb =
      radio::link_budget(w.zone_distance(from, to), shadow_db, rp);
  return radio::slot_supports_packet(lb, packet_bytes, slot_s);
}

}  // namespace mmrelay::world
