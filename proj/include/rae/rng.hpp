#pragma once

#include <cstdint>
#include <random>

namespace rae {

using Rng = std::mt19937_64;

/// Independent stream keyed by (seed, stream). Chains, users and replications
/// each take their own stream so results do not depend on execution order.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5241u};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace rae
