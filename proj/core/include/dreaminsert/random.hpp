#pragma once

#include <cstdint>
#include <random>

namespace dreaminsert {

/// Separate streams so that pixel noise, latent noise and toy-model parameters
/// drawn from the same user seed never alias.
enum class RngStream : std::uint32_t {
  pixel_noise = 1,
  latent_noise = 2,
  backend_params = 3,
  embedder_params = 4,
  synthetic_case = 5,
};

/// mt19937_64 seeded from (seed, index, stream) through std::seed_seq.
inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t index, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace dreaminsert
