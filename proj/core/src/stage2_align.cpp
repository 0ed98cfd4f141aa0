#include "dreaminsert/stage2_align.hpp"

#include "dreaminsert/ddim.hpp"
#include "dreaminsert/errors.hpp"

namespace dreaminsert {

void InjectionSchedule::validate() const {
  if (total_steps < 1) throw ValidationError("injection schedule: total_steps must be >= 1");
  for (Site s : kAllSites) {
    const int c = count(s);
    if (c < 0 || c > total_steps) {
      throw ValidationError("injection schedule: " + std::string(site_name(s)) + " count must lie in [0, total_steps]");
    }
  }
  if (!(blend >= 0.0 && blend <= 1.0)) throw ValidationError("injection schedule: blend must lie in [0,1]");
}

int InjectionSchedule::count(Site site) const {
  switch (site) {
    case Site::spatial_feature: return feature_steps;
    case Site::spatial_attention: return spatial_attn_steps;
    case Site::temporal_attention: return temporal_attn_steps;
  }
  return 0;
}

std::vector<Site> InjectionSchedule::active_sites() const {
  std::vector<Site> out;
  for (Site s : kAllSites)
    if (count(s) > 0) out.push_back(s);
  return out;
}

nlohmann::json to_json(const InjectionSchedule& s) {
  return {{"feature_steps", s.feature_steps},
          {"spatial_attn_steps", s.spatial_attn_steps},
          {"temporal_attn_steps", s.temporal_attn_steps},
          {"total_steps", s.total_steps},
          {"blend", s.blend}};
}

void RecordedFeatures::store(Site site, int step, std::vector<double> values) {
  data_.insert_or_assign({site, step}, std::move(values));
}

const std::vector<double>* RecordedFeatures::find(Site site, int step) const {
  const auto it = data_.find({site, step});
  return it == data_.end() ? nullptr : &it->second;
}

std::size_t RecordedFeatures::count(Site site) const {
  std::size_t n = 0;
  for (const auto& [key, _] : data_)
    if (key.first == site) ++n;
  return n;
}

void SiteTrace::at_site(Site site, const StepContext& ctx, std::vector<double>& values) {
  if (ctx.pass == pass_) features_.store(site, ctx.step, values);
}

RecordedFeatureInjector::RecordedFeatureInjector(const RecordedFeatures& recorded, const InjectionSchedule& schedule)
    : recorded_(recorded), schedule_(schedule) {
  schedule_.validate();
  for (Site s : schedule_.active_sites()) {
    for (int step = 1; step <= schedule_.count(s); ++step) {
      if (!recorded_.find(s, step)) {
        throw ValidationError("recorded features lack " + std::string(site_name(s)) + " for sampling step " +
                              std::to_string(step));
      }
    }
  }
}

std::vector<Site> RecordedFeatureInjector::sites() const { return schedule_.active_sites(); }

bool RecordedFeatureInjector::claims(int sampling_step, Site site) const {
  return sampling_step >= 1 && sampling_step <= schedule_.count(site);
}

void RecordedFeatureInjector::inject(Site site, const StepContext& ctx, std::vector<double>& values) {
  const auto* rec = recorded_.find(site, ctx.step);
  if (!rec) throw ValidationError("no recorded " + std::string(site_name(site)) + " for step " + std::to_string(ctx.step));
  if (rec->size() != values.size()) {
    throw ValidationError("recorded " + std::string(site_name(site)) + " has " + std::to_string(rec->size()) +
                          " values but the backend produced " + std::to_string(values.size()));
  }
  if (schedule_.blend == 1.0) {
    values = *rec;
    return;
  }
  const double w = schedule_.blend;
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = w * (*rec)[i] + (1.0 - w) * values[i];
}

namespace {

class InversionRecorder final : public SiteHook {
 public:
  InversionRecorder(const InjectionSchedule& schedule, int levels, RecordedFeatures& out)
      : schedule_(schedule), levels_(levels), out_(out) {}

  void at_site(Site site, const StepContext& ctx, std::vector<double>& values) override {
    int sampling_step = 0;
    if (ctx.pass == Pass::inversion) {
      sampling_step = levels_ - ctx.step + 2;
    } else if (ctx.pass == Pass::probe) {
      sampling_step = 1;
    } else {
      return;
    }
    if (sampling_step >= 1 && sampling_step <= schedule_.count(site)) out_.store(site, sampling_step, values);
  }

 private:
  const InjectionSchedule& schedule_;
  int levels_;
  RecordedFeatures& out_;
};

}  // namespace

VideoInversion invert_video(const Clip& coarse, DiffusionBackend& backend, const InjectionSchedule& schedule,
                            const Condition& inversion_cond) {
  schedule.validate();
  for (Site s : schedule.active_sites()) {
    if (!backend.has_site(s)) {
      throw ValidationError("backend '" + backend.id() + "' lacks scheduled site " + std::string(site_name(s)));
    }
  }
  VideoInversion r;
  r.grid = timestep_grid(backend.schedule(), schedule.total_steps);
  const int levels = static_cast<int>(r.grid.size()) - 1;

  backend.reset();
  const LatentClip z0 = encode_clip(backend.codec(), coarse);
  InversionRecorder recorder(schedule, levels, r.recorded);
  const bool recording = !schedule.active_sites().empty();
  r.zeta = invert_sequence(z0, inversion_cond, backend, r.grid, Granularity::whole_clip,
                           recording ? &recorder : nullptr);
  if (recording) {
    const int t_top = r.grid.back();
    const StepContext probe{Pass::probe, t_top, r.grid[r.grid.size() - 2], 1, 0};
    (void)backend.predict_noise(r.zeta, t_top, inversion_cond, probe, &recorder);
  }
  return r;
}

Clip align(const LatentClip& zeta, const Frame& first_frame, const std::string& prompt,
           const RecordedFeatures& recorded, const InjectionSchedule& schedule, DiffusionBackend& backend,
           SiteHook* observer) {
  schedule.validate();
  const auto grid = timestep_grid(backend.schedule(), schedule.total_steps);
  const Condition cond{prompt, first_frame};
  RecordedFeatureInjector injector(recorded, schedule);
  const LatentClip z0 = sample_sequence(zeta, cond, backend, grid, Granularity::whole_clip, &injector, observer);
  return decode_clip(backend.codec(), z0);
}

DInvResult run_d_inv(const Clip& copy_clip, const Clip& coarse_clip, const std::string& prompt,
                     DiffusionBackend& backend, const InjectionSchedule& schedule) {
  validate_clip(copy_clip);
  validate_clip(coarse_clip);
  if (copy_clip.size() != coarse_clip.size() || copy_clip.frame_size() != coarse_clip.frame_size()) {
    throw ValidationError("run_d_inv: copy and coarse clips differ in length or frame size");
  }
  VideoInversion inv = invert_video(coarse_clip, backend, schedule);
  DInvResult r;
  r.aligned = align(inv.zeta, copy_clip.frames.front(), prompt, inv.recorded, schedule, backend);
  r.aligned.fps = coarse_clip.fps;
  r.zeta = std::move(inv.zeta);
  r.manifest = {
      {"stage", "d-inv"},
      {"backend", backend.id()},
      {"schedule_hash", backend.schedule().hash()},
      {"prompt", prompt},
      {"injection", to_json(schedule)},
      {"recorded_entries", inv.recorded.size()},
      {"frames", r.aligned.size()},
  };
  return r;
}

}  // namespace dreaminsert
