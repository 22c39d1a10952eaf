#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace drivepred {

// Independent stream for (seed, k1, k2, ...). Streams never depend on how
// many draws another stream consumed.
inline std::mt19937_64 derived_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (auto k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace drivepred
