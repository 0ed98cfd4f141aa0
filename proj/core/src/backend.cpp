#include "dreaminsert/backend.hpp"

#include <algorithm>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

std::string_view site_name(Site site) noexcept {
  switch (site) {
    case Site::spatial_feature: return "spatial_feature";
    case Site::spatial_attention: return "spatial_attention";
    case Site::temporal_attention: return "temporal_attention";
  }
  return "unknown";
}

Site site_from_name(std::string_view name) {
  for (Site s : kAllSites) {
    if (site_name(s) == name) return s;
  }
  throw ValidationError("unknown injection site '" + std::string(name) + "'");
}

LatentShape Codec::latent_shape(FrameSize frame) const {
  const int f = factor();
  if (frame.width % f != 0 || frame.height % f != 0) {
    throw ValidationError("frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                          " is not divisible by the latent factor " + std::to_string(f));
  }
  return {channels(), frame.height / f, frame.width / f};
}

LatentClip encode_clip(const Codec& codec, const Clip& clip) {
  validate_clip(clip);
  LatentClip out(clip.size(), codec.latent_shape(clip.frame_size()));
  for (std::size_t n = 0; n < clip.size(); ++n) out.assign(n, codec.encode(clip.frames[n]));
  return out;
}

Clip decode_clip(const Codec& codec, const LatentClip& latents, double fps) {
  Clip clip;
  clip.fps = fps;
  clip.frames.reserve(latents.frames());
  for (std::size_t n = 0; n < latents.frames(); ++n) clip.frames.push_back(codec.decode(latents, n));
  return clip;
}

bool DiffusionBackend::has_site(Site site) const {
  const auto s = sites();
  return std::find(s.begin(), s.end(), site) != s.end();
}

}  // namespace dreaminsert
