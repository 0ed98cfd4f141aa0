#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dreaminsert {

struct FrameSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const FrameSize&, const FrameSize&) = default;
};

/// Axis-aligned pixel box. (x0, y0) is the inclusive top-left corner.
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int w = 1;
  int h = 1;

  int x1() const noexcept { return x0 + w; }  // exclusive
  int y1() const noexcept { return y0 + h; }  // exclusive
  bool fits(FrameSize frame) const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Per-frame change applied when generating a trajectory.
struct BoxDelta {
  int dx = 0;
  int dy = 0;
  int dw = 0;
  int dh = 0;
};

/// Dense {0,1} mask, one byte per pixel, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);

  static BinaryMask filled(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  FrameSize size() const noexcept { return {width_, height_}; }

  std::uint8_t at(int x, int y) const { return bits_[index(x, y)]; }
  void set(int x, int y, bool value = true) { bits_[index(x, y)] = value ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  /// Number of 1-pixels.
  std::size_t count() const noexcept;
  bool none() const noexcept { return count() == 0; }

  /// Tight bounding box of the 1-pixels. Throws ValidationError when empty.
  BBox support() const;

  /// Pointwise a <= b.
  bool subset_of(const BinaryMask& other) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct TrajectorySequence {
  std::vector<BBox> boxes;
  FrameSize frame;

  std::size_t size() const noexcept { return boxes.size(); }
};

/// Disjoint background / interaction-area / object masks of one frame.
struct RegionPartition {
  BinaryMask background;
  BinaryMask interaction;
  BinaryMask object;

  /// The trajectory mask this partition was built from (interaction | object).
  BinaryMask trajectory() const;
};

/// Builds boxes frame by frame from an initial box. Step i (producing
/// boxes[i+1]) uses deltas[min(i, deltas.size()-1)]; an empty schedule keeps
/// the box still. After each step the size is clamped to [1, frame] and the
/// corner to keep the box inside the frame.
TrajectorySequence generate_trajectory(const BBox& init, std::span<const BoxDelta> deltas,
                                       int n_frames, FrameSize frame);

/// Validates every box against the frame; throws ValidationError otherwise.
void validate_trajectory(const TrajectorySequence& traj);

BinaryMask rasterize(const BBox& box, FrameSize frame);
std::vector<BinaryMask> rasterize(const TrajectorySequence& traj);

/// Nearest-neighbour resize (pixel-centre sampling).
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

/// Crops the object mask to its support, resizes it to the box by nearest
/// neighbour and places it at the box corner in an otherwise empty frame.
BinaryMask merge_mask(const BinaryMask& obj_mask, const BBox& box, FrameSize frame);

/// Pointwise XOR of the merged and trajectory masks.
BinaryMask interaction_mask(const BinaryMask& merged, const BinaryMask& traj);

/// background = 1 - traj, interaction = traj xor merged, object = merged.
/// Requires merged <= traj pointwise.
RegionPartition partition(const BinaryMask& merged, const BinaryMask& traj);

}  // namespace dreaminsert
