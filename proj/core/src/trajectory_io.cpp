#include "dreaminsert/trajectory_io.hpp"

#include <fstream>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

namespace {

int required_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw ValidationError(std::string("trajectory spec: missing integer field '") + key + "'");
  }
  return j.at(key).get<int>();
}

}  // namespace

nlohmann::json box_to_json(const BBox& box) {
  return {{"x0", box.x0}, {"y0", box.y0}, {"w", box.w}, {"h", box.h}};
}

BBox box_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("trajectory spec: box must be an object");
  return {required_int(j, "x0"), required_int(j, "y0"), required_int(j, "w"), required_int(j, "h")};
}

TrajectorySequence trajectory_from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ValidationError("trajectory spec: expected a JSON object");
  const FrameSize frame{required_int(spec, "width"), required_int(spec, "height")};
  if (frame.width <= 0 || frame.height <= 0) {
    throw ValidationError("trajectory spec: width/height must be positive");
  }

  if (spec.contains("boxes")) {
    TrajectorySequence traj;
    traj.frame = frame;
    for (const auto& b : spec.at("boxes")) traj.boxes.push_back(box_from_json(b));
    if (spec.contains("frames") && spec.at("frames").get<int>() != static_cast<int>(traj.size())) {
      throw ValidationError("trajectory spec: 'frames' disagrees with the number of boxes");
    }
    validate_trajectory(traj);
    return traj;
  }

  if (!spec.contains("init")) throw ValidationError("trajectory spec: needs 'boxes' or 'init'");
  std::vector<BoxDelta> deltas;
  if (spec.contains("deltas")) {
    for (const auto& d : spec.at("deltas")) {
      deltas.push_back({d.value("dx", 0), d.value("dy", 0), d.value("dw", 0), d.value("dh", 0)});
    }
  }
  return generate_trajectory(box_from_json(spec.at("init")), deltas, required_int(spec, "frames"),
                             frame);
}

nlohmann::json trajectory_to_json(const TrajectorySequence& traj) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : traj.boxes) boxes.push_back(box_to_json(b));
  return {{"width", traj.frame.width},
          {"height", traj.frame.height},
          {"frames", traj.size()},
          {"boxes", std::move(boxes)}};
}

TrajectorySequence load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trajectory file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("trajectory file " + path.string() + ": " + e.what());
  }
  return trajectory_from_json(j);
}

void save_trajectory(const std::filesystem::path& path, const TrajectorySequence& traj) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << trajectory_to_json(traj).dump(2) << '\n';
}

}  // namespace dreaminsert
