#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mmrelay::rng {

// splitmix64 step (Steele, Lea, Flood / Vigna's public-domain constants).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// The substream mixing function: folds a list of key words (root seed,
// purpose tag, episode/frame/slot/link indices, ...) into one 64-bit
// stream seed. Every random draw in the simulator is keyed this way, so
// a draw depends only on its keys and never on evaluation order.
inline std::uint64_t mix(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc908ull;
  for (std::uint64_t w : words) {
    std::uint64_t s = h ^ (w * 0xff51afd7ed558ccdull + 0x2545f4914f6cdd1dull);
    h = splitmix64(s);
  }
  return h;
}

// Purpose tags for substream derivation.
enum Purpose : std::uint64_t {
  kStaticPlacement = 0x101,
  kDynamicPlacement = 0x102,
  kObstaclePath = 0x103,
  kShadow = 0x201,
  kBlockCoin = 0x202,
  kAck = 0x203,
  kEpisode = 0x301,
  kMatchedChannel = 0x302,
  kParamSample = 0x401,
};

// Minimal counter-style generator over splitmix64. Deterministic across
// platforms; good enough statistically for Monte Carlo simulation.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  // Uniform in [0, 1) with 53-bit resolution.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Zero-mean gaussian via Box-Muller; u1 is kept in (0, 1].
  double normal(double sigma) {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(u01() * static_cast<double>(n));
  }

 private:
  std::uint64_t state_;
};

}  // namespace mmrelay::rng
