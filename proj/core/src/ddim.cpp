#include "dreaminsert/ddim.hpp"

#include <cmath>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

namespace {

void validate_grid(std::span<const int> grid, const NoiseSchedule& schedule) {
  if (grid.size() < 2) throw ValidationError("timestep grid needs at least two levels");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] < 0 || grid[k] > schedule.T()) throw ValidationError("timestep grid leaves [0,T]");
    if (k > 0 && grid[k] <= grid[k - 1]) throw ValidationError("timestep grid must be strictly ascending");
  }
}

/// Injector first, then observer.
class InjectionHook final : public SiteHook {
 public:
  InjectionHook(Injector* injector, SiteHook* observer) : injector_(injector), observer_(observer) {}

  void at_site(Site site, const StepContext& ctx, std::vector<double>& values) override {
    if (injector_ && injector_->claims(ctx.step, site)) {
      const std::size_t n = values.size();
      injector_->inject(site, ctx, values);
      if (values.size() != n) throw ValidationError("injector changed the size of site " + std::string(site_name(site)));
    }
    if (observer_) observer_->at_site(site, ctx, values);
  }

 private:
  Injector* injector_;
  SiteHook* observer_;
};

template <class StepFn>
LatentClip traverse(const LatentClip& z, Granularity granularity, StepFn&& run_stream) {
  if (granularity == Granularity::whole_clip) return run_stream(z, std::size_t{0});
  LatentClip out(z.frames(), z.shape());
  for (std::size_t n = 0; n < z.frames(); ++n) out.assign(n, run_stream(z.slice(n), n));
  return out;
}

}  // namespace

LatentClip forward_noise(const LatentClip& z0, int t, const LatentClip& eps, const NoiseSchedule& schedule) {
  if (!z0.same_layout(eps)) throw ValidationError("forward_noise: noise layout differs from latents");
  const double a = schedule.alpha_bar(t);
  const double sa = std::sqrt(a);
  const double sn = std::sqrt(1.0 - a);
  LatentClip out = z0;
  auto o = out.values();
  const auto e = eps.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = sa * o[i] + sn * e[i];
  return out;
}

LatentClip ddim_update(const LatentClip& z, const LatentClip& eps, double alpha_from, double alpha_to) {
  if (!z.same_layout(eps)) throw ValidationError("ddim_update: noise layout differs from latents");
  if (!(alpha_from > 0.0 && alpha_from <= 1.0 && alpha_to > 0.0 && alpha_to <= 1.0)) {
    throw ValidationError("ddim_update: signal rates must lie in (0,1]");
  }
  const double ratio = std::sqrt(alpha_to / alpha_from);
  const double coef = std::sqrt(1.0 - alpha_to) - ratio * std::sqrt(1.0 - alpha_from);
  LatentClip out = z;
  auto o = out.values();
  const auto e = eps.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = ratio * o[i] + coef * e[i];
  return out;
}

LatentClip ddim_transition(const LatentClip& z, int t_from, int t_to, const Condition& cond,
                           DiffusionBackend& backend, const StepContext& ctx, SiteHook* hook) {
  const auto& schedule = backend.schedule();
  const double a_from = schedule.alpha_bar(t_from);
  const double a_to = schedule.alpha_bar(t_to);
  const LatentClip eps = backend.predict_noise(z, t_from, cond, ctx, hook);
  if (!eps.same_layout(z)) throw ValidationError("backend '" + backend.id() + "' returned noise of the wrong shape");
  return ddim_update(z, eps, a_from, a_to);
}

LatentClip ddim_step(const LatentClip& z, int t, const Condition& cond, DiffusionBackend& backend) {
  if (t <= 0 || t > backend.schedule().T()) throw ValidationError("ddim_step: t must lie in [1,T]");
  return ddim_transition(z, t, t - 1, cond, backend, {Pass::sampling, t, t - 1, 1, 0});
}

LatentClip ddim_invert_step(const LatentClip& z, int t, const Condition& cond, DiffusionBackend& backend) {
  if (t < 0 || t >= backend.schedule().T()) throw ValidationError("ddim_invert_step: t must lie in [0,T-1]");
  return ddim_transition(z, t, t + 1, cond, backend, {Pass::inversion, t, t + 1, 1, 0});
}

LatentClip invert_sequence(const LatentClip& z0, const Condition& cond, DiffusionBackend& backend,
                           std::span<const int> grid, Granularity granularity, SiteHook* observer) {
  validate_grid(grid, backend.schedule());
  return traverse(z0, granularity, [&](LatentClip z, std::size_t stream) {
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const StepContext ctx{Pass::inversion, grid[k], grid[k + 1], static_cast<int>(k) + 1, stream};
      z = ddim_transition(z, grid[k], grid[k + 1], cond, backend, ctx, observer);
    }
    return z;
  });
}

LatentClip sample_sequence(const LatentClip& zT, const Condition& cond, DiffusionBackend& backend,
                           std::span<const int> grid, Granularity granularity, Injector* injector,
                           SiteHook* observer) {
  validate_grid(grid, backend.schedule());
  if (injector) {
    for (Site s : injector->sites()) {
      if (!backend.has_site(s)) {
        throw ValidationError("injector references site '" + std::string(site_name(s)) +
                              "' which backend '" + backend.id() + "' does not expose");
      }
    }
  }
  InjectionHook hook(injector, observer);
  SiteHook* active = (injector || observer) ? &hook : nullptr;
  const std::size_t levels = grid.size() - 1;
  return traverse(zT, granularity, [&](LatentClip z, std::size_t stream) {
    for (std::size_t s = 1; s <= levels; ++s) {
      const int t_from = grid[levels - s + 1];
      const int t_to = grid[levels - s];
      const StepContext ctx{Pass::sampling, t_from, t_to, static_cast<int>(s), stream};
      z = ddim_transition(z, t_from, t_to, cond, backend, ctx, active);
    }
    return z;
  });
}

}  // namespace dreaminsert
