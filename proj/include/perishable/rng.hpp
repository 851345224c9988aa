#pragma once

#include <cstdint>
#include <random>

namespace perishable {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed and an index so that results do not depend on scheduling.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

// Sub-stream tags below an episode seed.
inline constexpr std::uint64_t kDemandStream = 0;
inline constexpr std::uint64_t kYieldStream = 1;
inline constexpr std::uint64_t kEstimatorStream = 2;
inline constexpr std::uint64_t kPolicyStream = 3;

}  // namespace perishable
