#include "dreaminsert/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "dreaminsert/errors.hpp"
#include "dreaminsert/image_io.hpp"
#include "dreaminsert/random.hpp"
#include "dreaminsert/trajectory_io.hpp"

namespace fs = std::filesystem;

namespace dreaminsert {

void validate_case(const CaseInputs& c) {
  validate_clip(c.background);
  validate_asset(c.asset);
  if (c.traj.size() != c.background.size()) {
    throw ValidationError("case '" + c.case_id + "': trajectory has " + std::to_string(c.traj.size()) +
                          " boxes but the background has " + std::to_string(c.background.size()) + " frames");
  }
  if (c.traj.frame != c.background.frame_size()) {
    throw ValidationError("case '" + c.case_id + "': trajectory frame size differs from the background");
  }
  validate_trajectory(c.traj);
}

CaseInputs load_case(const CasePaths& paths) {
  if (!fs::is_regular_file(paths.trajectory)) throw ValidationError("trajectory file not found: " + paths.trajectory.string());
  if (!fs::is_directory(paths.background_dir)) {
    throw ValidationError("background directory not found: " + paths.background_dir.string());
  }
  CaseInputs c;
  c.traj = load_trajectory(paths.trajectory);
  c.prompts = CasePrompts::load(paths.prompts);
  c.case_id = c.prompts.case_id;
  c.background = load_clip_dir(paths.background_dir);
  c.asset.image = load_png(paths.object_image);
  c.asset.mask = load_mask_png(paths.object_mask);
  validate_case(c);
  return c;
}

void make_dataset_case(const fs::path& dir, const CaseInputs& c) {
  validate_case(c);
  fs::create_directories(dir);
  const auto paths = CasePaths::from_case_dir(dir);
  save_clip_dir(paths.background_dir, c.background);
  save_png(paths.object_image, c.asset.image);
  save_mask_png(paths.object_mask, c.asset.mask);
  save_trajectory(paths.trajectory, c.traj);
  std::ofstream out(paths.prompts);
  if (!out) throw std::runtime_error("cannot write " + paths.prompts.string());
  out << c.prompts.to_json().dump(2) << '\n';
}

std::vector<fs::path> save_partitions(const fs::path& dir, const std::vector<RegionPartition>& parts) {
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::pair<const char*, BinaryMask> masks[] = {
        {"trajectory_", parts[i].trajectory()}, {"merged_", parts[i].object}, {"interaction_", parts[i].interaction}};
    for (const auto& [prefix, mask] : masks) {
      written.push_back(dir / frame_filename(i, prefix));
      save_mask_png(written.back(), mask);
    }
  }
  return written;
}

std::vector<RegionPartition> load_partitions(const fs::path& dir) {
  std::vector<RegionPartition> parts;
  for (std::size_t i = 0;; ++i) {
    const fs::path merged = dir / frame_filename(i, "merged_");
    const fs::path traj = dir / frame_filename(i, "trajectory_");
    if (!fs::is_regular_file(merged) || !fs::is_regular_file(traj)) break;
    parts.push_back(partition(load_mask_png(merged), load_mask_png(traj)));
  }
  if (parts.empty()) throw ValidationError("no merged_/trajectory_ masks found in " + dir.string());
  return parts;
}

CaseInputs make_synthetic_case(std::uint64_t seed, int frames, int size) {
  if (frames < 1) throw ValidationError("synthetic case: frames must be >= 1");
  if (size < 16) throw ValidationError("synthetic case: size must be >= 16");
  auto rng = seeded_engine(seed, 0, RngStream::synthetic_case);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double phase = u(rng);
  const double red = 0.75 + 0.2 * u(rng), green = 0.15 + 0.2 * u(rng), blue = 0.1 + 0.2 * u(rng);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  CaseInputs c;
  c.case_id = "synthetic-" + std::to_string(seed);
  c.background.fps = 8.0;
  for (int n = 0; n < frames; ++n) {
    Frame f(size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        f.at(x, y, 0) = static_cast<float>(0.5 + 0.35 * std::sin(two_pi * ((x + 2.0 * n) / size + phase)));
        f.at(x, y, 1) = static_cast<float>(0.15 + 0.7 * y / (size - 1));
        f.at(x, y, 2) = static_cast<float>(0.4 + 0.25 * std::cos(two_pi * ((x + y) / (2.0 * size) - double(n) / frames)));
      }
    }
    c.background.frames.push_back(quantize_8bit(f));
  }

  constexpr int kObj = 20;
  Frame obj(kObj, kObj, 0.5f);
  BinaryMask mask(kObj, kObj);
  const double r = kObj / 2.0 - 1.0;
  for (int y = 0; y < kObj; ++y) {
    for (int x = 0; x < kObj; ++x) {
      const double dx = x + 0.5 - kObj / 2.0, dy = y + 0.5 - kObj / 2.0;
      if (dx * dx + dy * dy > r * r) continue;
      mask.set(x, y);
      const double stripe = (x + y) % 6 < 2 ? 0.6 : 0.0;
      obj.at(x, y, 0) = static_cast<float>(red + (1.0 - red) * stripe);
      obj.at(x, y, 1) = static_cast<float>(green + (1.0 - green) * stripe);
      obj.at(x, y, 2) = static_cast<float>(blue + (1.0 - blue) * stripe);
    }
  }
  c.asset = {quantize_8bit(obj), mask};

  const int box = size / 4;
  const BBox init{size / 16, (size - box) / 2 - 2, box, box};
  const int dx = std::max(1, (size - box - 2 * init.x0) / std::max(1, frames - 1));
  std::vector<BoxDelta> deltas;
  for (int i = 0; i + 1 < frames; ++i) deltas.push_back({dx, i < (frames - 1) / 2 ? 1 : -1, 0, 0});
  c.traj = generate_trajectory(init, deltas, frames, {size, size});

  const std::string prompt = "a red ball rolling across a gradient floor";
  c.prompts = {c.case_id, prompt, prompt, prompt, "a red ball resting still on a gradient floor"};
  validate_case(c);
  return c;
}

}  // namespace dreaminsert
