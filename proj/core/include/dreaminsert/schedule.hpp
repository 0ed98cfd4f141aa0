#pragma once

#include <string>
#include <vector>

namespace dreaminsert {

/// Cumulative signal rates alpha_bar[t] for t = 0..T.
///
/// Invariants (checked at construction): at least two entries,
/// alpha_bar[0] >= 0.999, strictly decreasing, every value in (0, 1].
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> alpha_bar);

  /// alpha_bar[0] = 1, alpha_bar[t] = prod_{s=1..t} (1 - beta_s) with beta
  /// linear from beta_start (s = 1) to beta_end (s = T).
  static NoiseSchedule linear_beta(int train_steps = 1000, double beta_start = 1e-4,
                                   double beta_end = 0.02);

  int T() const noexcept { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const;
  const std::vector<double>& values() const noexcept { return alpha_bar_; }

  /// SHA-256 of the raw alpha_bar bytes, hex encoded.
  std::string hash() const;

 private:
  std::vector<double> alpha_bar_;
};

/// Uniform-stride inference grid t_k = floor(k * T / num_steps) for
/// k = 0..depth (depth defaults to num_steps). Ascending.
std::vector<int> timestep_grid(const NoiseSchedule& schedule, int num_steps, int depth = -1);

}  // namespace dreaminsert
