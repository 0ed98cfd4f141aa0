#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dreaminsert/geometry.hpp"
#include "dreaminsert/image.hpp"

namespace dreaminsert {

struct NoiseConfig {
  double sigma1 = 0.4;  // interaction area
  double sigma2 = 0.1;  // object area
  std::uint64_t seed = 0;

  /// Throws ValidationError when either sigma leaves [0,1]. Returns soft
  /// warnings (currently: sigma2 > sigma1).
  std::vector<std::string> validate() const;
};

/// The unit Gaussian field used for frame `frame_index`: H*W*3 values in the
/// Frame's HWC layout. Depends only on (seed, frame_index, size).
std::vector<float> pixel_noise_field(std::uint64_t seed, std::size_t frame_index, FrameSize size);

/// Region-weighted blend:
///   out = copy            on background
///       = s1*eps + (1-s1)*copy   on the interaction area
///       = s2*eps + (1-s2)*copy   on the object
/// One noise field per frame shared by both regions. Output is not clamped.
Clip inject_pixel_noise(const Clip& copy_clip, const std::vector<RegionPartition>& partitions,
                        const NoiseConfig& cfg);

}  // namespace dreaminsert
