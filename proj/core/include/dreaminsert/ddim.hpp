#pragma once

#include <span>

#include "dreaminsert/backend.hpp"
#include "dreaminsert/latent.hpp"
#include "dreaminsert/schedule.hpp"

namespace dreaminsert {

/// z_t = sqrt(a_t) z0 + sqrt(1 - a_t) eps.
LatentClip forward_noise(const LatentClip& z0, int t, const LatentClip& eps, const NoiseSchedule& schedule);

/// Deterministic DDIM transition between signal rates, in either direction:
///   z' = sqrt(a_to/a_from) z + (sqrt(1-a_to) - sqrt(a_to/a_from) sqrt(1-a_from)) eps
LatentClip ddim_update(const LatentClip& z, const LatentClip& eps, double alpha_from, double alpha_to);

/// One predictor call plus ddim_update from t_from to t_to.
LatentClip ddim_transition(const LatentClip& z, int t_from, int t_to, const Condition& cond,
                           DiffusionBackend& backend, const StepContext& ctx, SiteHook* hook = nullptr);

/// Sampling step t -> t-1. Rejects t = 0.
LatentClip ddim_step(const LatentClip& z, int t, const Condition& cond, DiffusionBackend& backend);

/// Inversion step t -> t+1. Rejects t = T.
LatentClip ddim_invert_step(const LatentClip& z, int t, const Condition& cond, DiffusionBackend& backend);

enum class Granularity {
  per_frame,   // every frame is its own stream (image model)
  whole_clip,  // one stream over all frames (video model)
};

/// DDIM inversion along an ascending timestep grid (grid.front() .. grid.back()).
LatentClip invert_sequence(const LatentClip& z0, const Condition& cond, DiffusionBackend& backend,
                           std::span<const int> grid, Granularity granularity,
                           SiteHook* observer = nullptr);

/// DDIM sampling from grid.back() down to grid.front(). Sampling step s runs
/// grid[S-s+1] -> grid[S-s] where S = grid.size() - 1. The injector (if any)
/// overrides activations at claimed (step, site) pairs; the observer sees the
/// final activations. Throws ValidationError if the injector names a site the
/// backend does not expose.
LatentClip sample_sequence(const LatentClip& zT, const Condition& cond, DiffusionBackend& backend,
                           std::span<const int> grid, Granularity granularity,
                           Injector* injector = nullptr, SiteHook* observer = nullptr);

}  // namespace dreaminsert
