#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dreaminsert/compositor.hpp"
#include "dreaminsert/config.hpp"
#include "dreaminsert/geometry.hpp"
#include "dreaminsert/image.hpp"

namespace dreaminsert {

/// Everything one insertion case needs, loaded and validated.
struct CaseInputs {
  std::string case_id;
  Clip background;
  ObjectAsset asset;
  TrajectorySequence traj;
  CasePrompts prompts;
};

/// Loads and cross-checks a case (trajectory length and frame size against
/// the background). Throws ValidationError.
CaseInputs load_case(const CasePaths& paths);

/// Checks the pieces of a case against each other. Throws ValidationError.
void validate_case(const CaseInputs& c);

/// Writes the canonical case layout into `dir`:
///   background/frame_####.png, object.png, object_mask.png,
///   trajectory.json, prompts.json
void make_dataset_case(const std::filesystem::path& dir, const CaseInputs& c);

/// Per-frame region masks as trajectory_####.png, merged_####.png and
/// interaction_####.png. Returns the files written.
std::vector<std::filesystem::path> save_partitions(const std::filesystem::path& dir,
                                                   const std::vector<RegionPartition>& parts);

/// Rebuilds partitions from the merged and trajectory masks in `dir`
/// (frames 0.. until the first gap). Throws ValidationError.
std::vector<RegionPartition> load_partitions(const std::filesystem::path& dir);

/// Desk-scale stand-in for a real case: a moving gradient background, a
/// striped disc object and a gently arcing trajectory. Deterministic in `seed`.
CaseInputs make_synthetic_case(std::uint64_t seed = 0, int frames = 16, int size = 64);

}  // namespace dreaminsert
