#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dreaminsert/image.hpp"
#include "dreaminsert/latent.hpp"
#include "dreaminsert/schedule.hpp"

namespace dreaminsert {

/// Hookable activations a noise predictor may expose per denoising call.
enum class Site {
  spatial_feature,     // per-frame feature map
  spatial_attention,   // per-frame pre-softmax attention scores
  temporal_attention,  // cross-frame pre-softmax attention scores
};

inline constexpr Site kAllSites[] = {Site::spatial_feature, Site::spatial_attention,
                                     Site::temporal_attention};

std::string_view site_name(Site site) noexcept;
Site site_from_name(std::string_view name);

enum class Pass { inversion, sampling, probe };

/// Identifies one predictor call inside a DDIM traversal.
struct StepContext {
  Pass pass = Pass::sampling;
  int t_from = 0;
  int t_to = 0;
  /// 1-based index of the transition within its traversal. For sampling this
  /// is the denoising step number (step 1 starts from the noisiest level).
  int step = 1;
  /// Independent latent stream (frame index for per-frame traversals, 0 for
  /// whole-clip ones).
  std::size_t stream = 0;
};

/// Observes or overwrites site activations while a predictor runs. The value
/// vector must keep its size.
class SiteHook {
 public:
  virtual ~SiteHook() = default;
  virtual void at_site(Site site, const StepContext& ctx, std::vector<double>& values) = 0;
};

/// Prompt plus optional first-frame image conditioning.
struct Condition {
  std::string text;
  std::optional<Frame> first_frame;
};

/// Pixel <-> latent mapping. Latent spatial dims are frame dims / factor().
class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::string name() const = 0;
  virtual int factor() const = 0;
  virtual int channels() const = 0;
  LatentShape latent_shape(FrameSize frame) const;
  /// Single-frame latent.
  virtual LatentClip encode(const Frame& frame) const = 0;
  virtual Frame decode(const LatentClip& latents, std::size_t n) const = 0;
};

LatentClip encode_clip(const Codec& codec, const Clip& clip);
Clip decode_clip(const Codec& codec, const LatentClip& latents, double fps = 8.0);

/// Noise schedule + codec + noise predictor with named injection sites.
class DiffusionBackend {
 public:
  virtual ~DiffusionBackend() = default;

  virtual std::string id() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;
  virtual const Codec& codec() const = 0;
  virtual std::vector<Site> sites() const { return {}; }
  bool has_site(Site site) const;

  /// Noise estimate for `z` at timestep t. Sites are reported to `hook`
  /// (which may be null) in the order the predictor computes them.
  virtual LatentClip predict_noise(const LatentClip& z, int t, const Condition& cond,
                                   const StepContext& ctx, SiteHook* hook) = 0;

  /// Drops any per-run state (recorded tapes).
  virtual void reset() {}
};

/// Overrides site activations during sampling for the steps it claims.
class Injector {
 public:
  virtual ~Injector() = default;
  virtual std::vector<Site> sites() const = 0;
  virtual bool claims(int sampling_step, Site site) const = 0;
  virtual void inject(Site site, const StepContext& ctx, std::vector<double>& values) = 0;
};

}  // namespace dreaminsert
