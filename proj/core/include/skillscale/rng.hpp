#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace skillscale {

// All randomness flows through std::mt19937_64 engines whose seeds are
// derived from (run seed, purpose) with splitmix64, so independent purposes
// never share a stream and every generator is reproducible from the run seed.
using Rng = std::mt19937_64;

enum class Stream : std::uint64_t {
  task_spec = 1,
  dataset = 2,
  evaluation = 3,
  mlp_init = 4,
  mlp_batches = 5,
  basis = 6,
  extended_init = 7,
  synthetic = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Rng{derive_seed(seed, stream, index)};
}

// The helpers below avoid std::uniform_*_distribution and std::shuffle, whose
// output sequences differ between standard libraries.

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform index in [0, n). n must be positive and below 2^53.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

/// Standard normal via Box-Muller; consumes two engine draws per call.
double standard_normal(Rng& rng);

}  // namespace skillscale
