#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "dreaminsert/geometry.hpp"

namespace dreaminsert {

/// Trajectory spec file:
///   { "init": {x0,y0,w,h}, "deltas": [{dx,dy,dw,dh}, ...], "frames": N,
///     "width": W, "height": H }
/// or the same with "boxes": [{x0,y0,w,h}, ...], which overrides generation.
TrajectorySequence trajectory_from_json(const nlohmann::json& spec);

/// Writes the resolved trajectory in the explicit-"boxes" form.
nlohmann::json trajectory_to_json(const TrajectorySequence& traj);

TrajectorySequence load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const TrajectorySequence& traj);

nlohmann::json box_to_json(const BBox& box);
BBox box_from_json(const nlohmann::json& j);

}  // namespace dreaminsert
