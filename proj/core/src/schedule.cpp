#include "dreaminsert/schedule.hpp"

#include <span>

#include "dreaminsert/errors.hpp"
#include "dreaminsert/hash.hpp"

namespace dreaminsert {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
  if (alpha_bar_.size() < 2) throw ValidationError("NoiseSchedule: need at least two entries");
  if (!(alpha_bar_.front() >= 0.999)) throw ValidationError("NoiseSchedule: alpha_bar[0] must be >= 0.999");
  for (std::size_t t = 0; t < alpha_bar_.size(); ++t) {
    const double a = alpha_bar_[t];
    if (!(a > 0.0 && a <= 1.0)) throw ValidationError("NoiseSchedule: values must lie in (0,1]");
    if (t > 0 && !(a < alpha_bar_[t - 1])) {
      throw ValidationError("NoiseSchedule: alpha_bar must be strictly decreasing (t=" + std::to_string(t) + ")");
    }
  }
}

NoiseSchedule NoiseSchedule::linear_beta(int train_steps, double beta_start, double beta_end) {
  if (train_steps < 1) throw ValidationError("linear_beta: train_steps must be >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw ValidationError("linear_beta: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> a(static_cast<std::size_t>(train_steps) + 1);
  a[0] = 1.0;
  for (int s = 1; s <= train_steps; ++s) {
    const double frac = train_steps == 1 ? 0.0 : static_cast<double>(s - 1) / (train_steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    a[static_cast<std::size_t>(s)] = a[static_cast<std::size_t>(s) - 1] * (1.0 - beta);
  }
  return NoiseSchedule(std::move(a));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > T()) throw ValidationError("timestep " + std::to_string(t) + " outside [0," + std::to_string(T()) + "]");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

std::string NoiseSchedule::hash() const {
  return sha256_hex(std::as_bytes(std::span<const double>(alpha_bar_)));
}

std::vector<int> timestep_grid(const NoiseSchedule& schedule, int num_steps, int depth) {
  const int T = schedule.T();
  if (num_steps < 1 || num_steps > T) {
    throw ValidationError("num_steps must lie in [1," + std::to_string(T) + "]");
  }
  if (depth < 0) depth = num_steps;
  if (depth < 1 || depth > num_steps) throw ValidationError("inversion depth must lie in [1, num_steps]");
  std::vector<int> grid;
  grid.reserve(static_cast<std::size_t>(depth) + 1);
  for (int k = 0; k <= depth; ++k) {
    grid.push_back(static_cast<int>(static_cast<long long>(k) * T / num_steps));
  }
  return grid;
}

}  // namespace dreaminsert
