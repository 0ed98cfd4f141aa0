#include "dreaminsert/text.hpp"

#include <cctype>
#include <random>

#include "dreaminsert/hash.hpp"
#include "dreaminsert/random.hpp"

namespace dreaminsert {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<double> hashed_token_vector(std::string_view text, int dim, std::uint64_t seed) {
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  auto add_token = [&](std::string_view tok) {
    auto rng = seeded_engine(seed ^ fnv1a64(tok), static_cast<std::uint64_t>(dim), RngStream::embedder_params);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& x : v) x += normal(rng);
  };
  add_token("<bos>");
  for (const auto& tok : tokenize(text)) add_token(tok);
  return v;
}

}  // namespace dreaminsert
