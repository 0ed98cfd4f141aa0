#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dreaminsert/backend.hpp"
#include "dreaminsert/geometry.hpp"
#include "dreaminsert/image.hpp"
#include "dreaminsert/latent.hpp"

namespace dreaminsert {

/// A binary mask at latent resolution.
class LatentMask {
 public:
  LatentMask() = default;
  explicit LatentMask(BinaryMask grid) : grid_(std::move(grid)) {}

  const BinaryMask& grid() const noexcept { return grid_; }
  int width() const noexcept { return grid_.width(); }
  int height() const noexcept { return grid_.height(); }

 private:
  BinaryMask grid_;
};

/// Max-pool downscale: a latent cell is set iff any pixel of its
/// factor x factor tile is set. Dimensions must be divisible by the factor.
LatentMask rescale_mask(const BinaryMask& mask, int factor);

/// Unit Gaussian latent field for frame `frame_index` (one frame, `shape`).
LatentClip latent_noise_field(std::uint64_t seed, std::size_t frame_index, LatentShape shape);

/// Replaces masked cells (all channels) with fresh N(0,1) draws; every other
/// cell is copied verbatim.
LatentClip inject_latent(const LatentClip& xi, std::span<const LatentMask> masks, std::uint64_t seed);

struct LnInjOptions {
  int steps = 50;
  /// Inversion depth in inference steps; -1 inverts the full grid.
  int invert_steps = -1;
  std::uint64_t seed = 0;
  /// Invert with the object prompt instead of unconditionally.
  bool invert_conditioned = false;
  /// Fail when a frame has an empty interaction area.
  bool strict = false;
};

struct LnInjResult {
  Clip coarse;
  LatentClip inverted;  // per-frame inverted latents
  LatentClip injected;  // starting point of decoding
  std::vector<int> grid;
};

/// Encode -> per-frame inversion -> interaction-area noise replacement ->
/// prompt-conditioned per-frame sampling -> decode.
LnInjResult run_ln_inj(const Clip& copy_clip, const std::vector<RegionPartition>& partitions,
                       const Condition& cond_obj, DiffusionBackend& backend, const LnInjOptions& options);

}  // namespace dreaminsert
