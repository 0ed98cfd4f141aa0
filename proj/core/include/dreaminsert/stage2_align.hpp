#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dreaminsert/backend.hpp"
#include "dreaminsert/image.hpp"
#include "dreaminsert/latent.hpp"

namespace dreaminsert {

/// How many leading sampling steps each site is overridden for.
struct InjectionSchedule {
  int feature_steps = 5;
  int spatial_attn_steps = 5;
  int temporal_attn_steps = 5;
  int total_steps = 50;
  /// 1 replaces activations with the recorded ones; below 1 blends linearly.
  double blend = 1.0;

  void validate() const;
  int count(Site site) const;
  /// Sites with a non-zero count.
  std::vector<Site> active_sites() const;
};

nlohmann::json to_json(const InjectionSchedule& s);

/// Site activations keyed by (site, sampling step they override).
class RecordedFeatures {
 public:
  void store(Site site, int step, std::vector<double> values);
  const std::vector<double>* find(Site site, int step) const;
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t count(Site site) const;

  const auto& entries() const noexcept { return data_; }

 private:
  std::map<std::pair<Site, int>, std::vector<double>> data_;
};

/// Records every activation seen during one pass type, keyed by ctx.step.
/// Useful for tracing a sampling run.
class SiteTrace final : public SiteHook {
 public:
  explicit SiteTrace(Pass pass = Pass::sampling) : pass_(pass) {}
  void at_site(Site site, const StepContext& ctx, std::vector<double>& values) override;
  const RecordedFeatures& features() const noexcept { return features_; }

 private:
  Pass pass_;
  RecordedFeatures features_;
};

/// Replays recorded activations for sampling steps 1..count(site).
class RecordedFeatureInjector final : public Injector {
 public:
  RecordedFeatureInjector(const RecordedFeatures& recorded, const InjectionSchedule& schedule);
  std::vector<Site> sites() const override;
  bool claims(int sampling_step, Site site) const override;
  void inject(Site site, const StepContext& ctx, std::vector<double>& values) override;

 private:
  const RecordedFeatures& recorded_;
  InjectionSchedule schedule_;
};

struct VideoInversion {
  LatentClip zeta;
  RecordedFeatures recorded;
  std::vector<int> grid;
};

/// Whole-clip DDIM inversion over `schedule.total_steps`, recording each
/// scheduled site at the noise level its sampling step starts from (sampling
/// step s is fed by the inversion state at the same level; step 1 needs one
/// extra probe evaluation at the final level).
VideoInversion invert_video(const Clip& coarse, DiffusionBackend& backend, const InjectionSchedule& schedule,
                            const Condition& inversion_cond = {});

/// Whole-clip sampling from zeta conditioned on (prompt, first frame), with
/// recorded activations injected for the scheduled leading steps.
Clip align(const LatentClip& zeta, const Frame& first_frame, const std::string& prompt,
           const RecordedFeatures& recorded, const InjectionSchedule& schedule, DiffusionBackend& backend,
           SiteHook* observer = nullptr);

struct DInvResult {
  Clip aligned;
  LatentClip zeta;
  nlohmann::json manifest;
};

/// invert_video(coarse) then align with the first frame of the copy clip.
DInvResult run_d_inv(const Clip& copy_clip, const Clip& coarse_clip, const std::string& prompt,
                     DiffusionBackend& backend, const InjectionSchedule& schedule);

}  // namespace dreaminsert
