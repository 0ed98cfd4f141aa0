#include "dreaminsert/stage1_latent.hpp"

#include <random>

#include "dreaminsert/ddim.hpp"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/random.hpp"

namespace dreaminsert {

LatentMask rescale_mask(const BinaryMask& mask, int factor) {
  if (factor < 1) throw ValidationError("rescale_mask: factor must be >= 1");
  if (mask.width() % factor != 0 || mask.height() % factor != 0) {
    throw ValidationError("rescale_mask: mask " + std::to_string(mask.width()) + "x" +
                          std::to_string(mask.height()) + " is not divisible by " + std::to_string(factor));
  }
  BinaryMask out(mask.width() / factor, mask.height() / factor);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) out.set(x / factor, y / factor);
  return LatentMask(std::move(out));
}

LatentClip latent_noise_field(std::uint64_t seed, std::size_t frame_index, LatentShape shape) {
  auto rng = seeded_engine(seed, frame_index, RngStream::latent_noise);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentClip eps(1, shape);
  for (auto& v : eps.values()) v = normal(rng);
  return eps;
}

LatentClip inject_latent(const LatentClip& xi, std::span<const LatentMask> masks, std::uint64_t seed) {
  if (masks.size() != xi.frames()) throw ValidationError("inject_latent: mask count differs from frame count");
  const LatentShape& s = xi.shape();
  LatentClip out = xi;
  for (std::size_t n = 0; n < xi.frames(); ++n) {
    const LatentMask& m = masks[n];
    if (m.width() != s.width || m.height() != s.height) {
      throw ValidationError("inject_latent: mask " + std::to_string(n) + " does not match the latent grid");
    }
    if (m.grid().none()) continue;
    const LatentClip eps = latent_noise_field(seed, n, s);
    for (int c = 0; c < s.channels; ++c)
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x)
          if (m.grid().at(x, y)) out.at(n, c, y, x) = eps.at(0, c, y, x);
  }
  return out;
}

LnInjResult run_ln_inj(const Clip& copy_clip, const std::vector<RegionPartition>& partitions,
                       const Condition& cond_obj, DiffusionBackend& backend, const LnInjOptions& options) {
  validate_clip(copy_clip);
  if (partitions.size() != copy_clip.size()) {
    throw ValidationError("run_ln_inj: partition count differs from frame count");
  }
  const int factor = backend.codec().factor();
  std::vector<LatentMask> masks;
  masks.reserve(partitions.size());
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (options.strict && partitions[i].interaction.none()) {
      throw ValidationError("run_ln_inj: frame " + std::to_string(i) + " has an empty interaction area");
    }
    masks.push_back(rescale_mask(partitions[i].interaction, factor));
  }

  LnInjResult r;
  r.grid = timestep_grid(backend.schedule(), options.steps, options.invert_steps);
  backend.reset();

  const LatentClip z0 = encode_clip(backend.codec(), copy_clip);
  const Condition unconditional{};
  const Condition& inv_cond = options.invert_conditioned ? cond_obj : unconditional;
  r.inverted = invert_sequence(z0, inv_cond, backend, r.grid, Granularity::per_frame);
  r.injected = inject_latent(r.inverted, masks, options.seed);
  const LatentClip denoised = sample_sequence(r.injected, cond_obj, backend, r.grid, Granularity::per_frame);
  r.coarse = decode_clip(backend.codec(), denoised, copy_clip.fps);
  return r;
}

}  // namespace dreaminsert
