#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <tuple>
#include <vector>

#include "dreaminsert/backend.hpp"

namespace dreaminsert {

/// Latent = pixels (C = 3, factor 1). encode/decode are exact inverses.
class IdentityCodec final : public Codec {
 public:
  std::string name() const override { return "identity"; }
  int factor() const override { return 1; }
  int channels() const override { return Frame::kChannels; }
  LatentClip encode(const Frame& frame) const override;
  Frame decode(const LatentClip& latents, std::size_t n) const override;
};

/// factor x factor average pooling. Channels 0..2 hold 2*mean(RGB)-1, any
/// further channels hold 2*mean(luma)-1. Decoding upsamples the first three
/// channels by nearest neighbour, so decode(encode(x)) is a blocky
/// approximation of x while encode(decode(z)) reproduces the RGB channels.
class PoolCodec final : public Codec {
 public:
  explicit PoolCodec(int factor = 8, int channels = 4);
  std::string name() const override { return "pool"; }
  int factor() const override { return factor_; }
  int channels() const override { return channels_; }
  LatentClip encode(const Frame& frame) const override;
  Frame decode(const LatentClip& latents, std::size_t n) const override;

 private:
  int factor_;
  int channels_;
};

/// Shared plumbing for the deterministic desk-scale backends.
class ToyBackend : public DiffusionBackend {
 public:
  std::string id() const override { return id_; }
  const NoiseSchedule& schedule() const override { return schedule_; }
  const Codec& codec() const override { return *codec_; }

 protected:
  ToyBackend(std::string id, NoiseSchedule schedule, std::unique_ptr<Codec> codec);

 private:
  std::string id_;
  NoiseSchedule schedule_;
  std::unique_ptr<Codec> codec_;
};

/// "toy-zero": predicts zero noise everywhere. No sites.
class ZeroNoiseBackend final : public ToyBackend {
 public:
  ZeroNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec);
  LatentClip predict_noise(const LatentClip& z, int t, const Condition& cond, const StepContext& ctx,
                           SiteHook* hook) override;
};

/// "toy-const": predicts the same constant everywhere. No sites.
class ConstantNoiseBackend final : public ToyBackend {
 public:
  ConstantNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec, double value);
  LatentClip predict_noise(const LatentClip& z, int t, const Condition& cond, const StepContext& ctx,
                           SiteHook* hook) override;
  double value() const noexcept { return value_; }

 private:
  double value_;
};

struct LinearPredictorParams {
  /// Frobenius norm of the random channel-mixing matrix (an upper bound on
  /// its operator norm).
  double lipschitz = 0.5;
  double spatial_gain = 0.2;
  double temporal_gain = 0.2;
  /// Multiplier on the normalized dot products that form attention scores.
  double score_scale = 4.0;
  double condition_gain = 0.05;
  std::uint64_t seed = 0;
  /// Explicit C x C row-major mixing matrix; overrides the random draw.
  std::optional<std::vector<double>> channel_mix;
};

/// "toy-linear": a fixed random per-pixel channel mix W followed by two
/// softmax attention mixers, exposing all three sites:
///
///   f      = W z                                  spatial_feature   [N*C*P]
///   S[n]   = scale/P * f_n f_n^T   (C x C)         spatial_attention [N*C*C]
///   T      = scale/(C*P) * <f_i, f_j> (N x N)      temporal_attention [N*N]
///   eps    = (1-gs-gt) f + gs softmax(S) f + gt softmax(T) f + alpha_bar(t) bias(cond)
///
/// The alpha_bar(t) factor keeps the condition's total pull on a full
/// sampling trajectory bounded (about pi/2 * condition_gain).
/// With both gains zero and condition_gain zero the predictor is exactly
/// linear in z with Lipschitz constant <= `lipschitz`.
class LinearNoiseBackend : public ToyBackend {
 public:
  LinearNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec, LinearPredictorParams params,
                     std::string id = "toy-linear");

  std::vector<Site> sites() const override;
  LatentClip predict_noise(const LatentClip& z, int t, const Condition& cond, const StepContext& ctx,
                           SiteHook* hook) override;

  const std::vector<double>& channel_mix() const noexcept { return mix_; }
  const LinearPredictorParams& params() const noexcept { return params_; }
  /// Per-channel additive term contributed by the condition, before the
  /// alpha_bar(t) factor.
  std::vector<double> condition_bias(const Condition& cond) const;

 private:
  LinearPredictorParams params_;
  std::vector<double> mix_;
};

/// "toy-replay": the linear predictor, plus a tape. Every inversion call
/// stores its noise estimate keyed by (stream, lower level, upper level); a
/// sampling call over the same pair of levels replays the stored estimate, so
/// invert-then-sample is an exact algebraic round trip. Sites still run (and
/// can be observed) but cannot change a replayed output.
class ReplayNoiseBackend final : public LinearNoiseBackend {
 public:
  ReplayNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec, LinearPredictorParams params);

  LatentClip predict_noise(const LatentClip& z, int t, const Condition& cond, const StepContext& ctx,
                           SiteHook* hook) override;
  void reset() override { tape_.clear(); }
  std::size_t tape_size() const noexcept { return tape_.size(); }

 private:
  std::map<std::tuple<std::size_t, int, int>, LatentClip> tape_;
};

}  // namespace dreaminsert
