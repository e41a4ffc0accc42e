#pragma once

#include <cstdint>
#include <random>

namespace gibbscal {

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed for stream `index` of root `seed`.
///
/// Two rounds of the splitmix64 finalizer over (seed, index). Every random
/// consumer in the library (bootstrap replicates, per-w chains, Monte-Carlo
/// iterations, experiments) gets its stream through this function, so results
/// never depend on scheduling order.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);

inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(split_seed(seed, index));
}

/// Stream index for a real-valued key (e.g. a loss scale). Uses the bit
/// pattern so that inserting new keys never perturbs existing streams.
std::uint64_t key_index(double key);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

}  // namespace gibbscal
