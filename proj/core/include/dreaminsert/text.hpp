#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dreaminsert {

/// Lower-cased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic bag-of-tokens vector: sum over tokens (plus a fixed
/// beginning-of-text token) of a seeded Gaussian vector per token, not
/// normalized. Same (text, dim, seed) always gives the same vector.
std::vector<double> hashed_token_vector(std::string_view text, int dim, std::uint64_t seed);

}  // namespace dreaminsert
