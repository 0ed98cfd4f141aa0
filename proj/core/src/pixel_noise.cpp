#include "dreaminsert/pixel_noise.hpp"

#include <random>

#include "dreaminsert/errors.hpp"
#include "dreaminsert/random.hpp"

namespace dreaminsert {

std::vector<std::string> NoiseConfig::validate() const {
  auto in_unit = [](double s) { return s >= 0.0 && s <= 1.0; };
  if (!in_unit(sigma1)) throw ValidationError("sigma1 must lie in [0,1]");
  if (!in_unit(sigma2)) throw ValidationError("sigma2 must lie in [0,1]");
  std::vector<std::string> warnings;
  if (sigma2 > sigma1) {
    warnings.emplace_back("sigma2 exceeds sigma1: the object area gets more noise than the interaction area");
  }
  return warnings;
}

std::vector<float> pixel_noise_field(std::uint64_t seed, std::size_t frame_index, FrameSize size) {
  auto rng = seeded_engine(seed, frame_index, RngStream::pixel_noise);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> eps(static_cast<std::size_t>(size.width) * static_cast<std::size_t>(size.height) *
                         Frame::kChannels);
  for (auto& e : eps) e = normal(rng);
  return eps;
}

Clip inject_pixel_noise(const Clip& copy_clip, const std::vector<RegionPartition>& partitions,
                        const NoiseConfig& cfg) {
  cfg.validate();
  validate_clip(copy_clip);
  if (partitions.size() != copy_clip.size()) {
    throw ValidationError("inject_pixel_noise: partition count differs from frame count");
  }
  const FrameSize size = copy_clip.frame_size();
  const float s1 = static_cast<float>(cfg.sigma1);
  const float s2 = static_cast<float>(cfg.sigma2);

  Clip out = copy_clip;
  for (std::size_t i = 0; i < copy_clip.size(); ++i) {
    const RegionPartition& part = partitions[i];
    if (part.object.size() != size || part.interaction.size() != size) {
      throw ValidationError("inject_pixel_noise: partition " + std::to_string(i) +
                            " does not match the frame size");
    }
    const auto eps = pixel_noise_field(cfg.seed, i, size);
    const Frame& src = copy_clip.frames[i];
    Frame& dst = out.frames[i];
    for (int y = 0; y < size.height; ++y) {
      for (int x = 0; x < size.width; ++x) {
        float sigma;
        if (part.interaction.at(x, y)) {
          sigma = s1;
        } else if (part.object.at(x, y)) {
          sigma = s2;
        } else {
          continue;
        }
        const std::size_t base =
            (static_cast<std::size_t>(y) * static_cast<std::size_t>(size.width) + static_cast<std::size_t>(x)) *
            Frame::kChannels;
        for (int c = 0; c < Frame::kChannels; ++c) {
          dst.at(x, y, c) = sigma * eps[base + static_cast<std::size_t>(c)] + (1.0f - sigma) * src.at(x, y, c);
        }
      }
    }
  }
  return out;
}

}  // namespace dreaminsert
