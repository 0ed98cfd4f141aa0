#include "dreaminsert/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

namespace {

std::string describe(const BBox& b) {
  std::ostringstream os;
  os << "(" << b.x0 << "," << b.y0 << "," << b.w << "," << b.h << ")";
  return os.str();
}

void require_same_size(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": mask dimensions differ");
  }
}

}  // namespace

bool BBox::fits(FrameSize frame) const noexcept {
  return w >= 1 && h >= 1 && x0 >= 0 && y0 >= 0 && x1() <= frame.width &&
         y1() <= frame.height;
}

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("BinaryMask: negative dimensions");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

BinaryMask BinaryMask::filled(int width, int height) {
  BinaryMask m(width, height);
  std::fill(m.bits_.begin(), m.bits_.end(), std::uint8_t{1});
  return m;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BBox BinaryMask::support() const {
  int xmin = width_, ymin = height_, xmax = -1, ymax = -1;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax < 0) throw ValidationError("mask has empty support");
  return {xmin, ymin, xmax - xmin + 1, ymax - ymin + 1};
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  require_same_size(*this, other, "subset_of");
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] > other.bits_[i]) return false;
  }
  return true;
}

BinaryMask RegionPartition::trajectory() const {
  BinaryMask out(object.width(), object.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      out.set(x, y, interaction.at(x, y) || object.at(x, y));
  return out;
}

TrajectorySequence generate_trajectory(const BBox& init, std::span<const BoxDelta> deltas,
                                       int n_frames, FrameSize frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    throw ValidationError("generate_trajectory: frame dimensions must be positive");
  }
  if (n_frames < 1) throw ValidationError("generate_trajectory: n_frames must be >= 1");
  if (!init.fits(frame)) {
    throw ValidationError("generate_trajectory: initial box " + describe(init) +
                          " is not inside the frame");
  }

  TrajectorySequence traj;
  traj.frame = frame;
  traj.boxes.reserve(static_cast<std::size_t>(n_frames));
  traj.boxes.push_back(init);

  for (int i = 0; i + 1 < n_frames; ++i) {
    const BoxDelta d = deltas.empty()
                           ? BoxDelta{}
                           : deltas[std::min<std::size_t>(static_cast<std::size_t>(i),
                                                          deltas.size() - 1)];
    const BBox& prev = traj.boxes.back();
    BBox next;
    next.w = std::clamp(prev.w + d.dw, 1, frame.width);
    next.h = std::clamp(prev.h + d.dh, 1, frame.height);
    next.x0 = std::clamp(prev.x0 + d.dx, 0, frame.width - next.w);
    next.y0 = std::clamp(prev.y0 + d.dy, 0, frame.height - next.h);
    traj.boxes.push_back(next);
  }
  return traj;
}

void validate_trajectory(const TrajectorySequence& traj) {
  if (traj.frame.width <= 0 || traj.frame.height <= 0) {
    throw ValidationError("trajectory: frame dimensions must be positive");
  }
  if (traj.boxes.empty()) throw ValidationError("trajectory: no boxes");
  for (std::size_t i = 0; i < traj.boxes.size(); ++i) {
    if (!traj.boxes[i].fits(traj.frame)) {
      throw ValidationError("trajectory: box " + std::to_string(i) + " " +
                            describe(traj.boxes[i]) + " is not inside the frame");
    }
  }
}

BinaryMask rasterize(const BBox& box, FrameSize frame) {
  if (!box.fits(frame)) throw ValidationError("rasterize: box " + describe(box) + " out of frame");
  BinaryMask m(frame.width, frame.height);
  for (int y = box.y0; y < box.y1(); ++y)
    for (int x = box.x0; x < box.x1(); ++x) m.set(x, y);
  return m;
}

std::vector<BinaryMask> rasterize(const TrajectorySequence& traj) {
  validate_trajectory(traj);
  std::vector<BinaryMask> out;
  out.reserve(traj.size());
  for (const auto& b : traj.boxes) out.push_back(rasterize(b, traj.frame));
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("resize_nearest: target must be >= 1x1");
  if (mask.width() < 1 || mask.height() < 1) throw ValidationError("resize_nearest: empty source");
  BinaryMask out(width, height);
  const auto W = static_cast<long long>(mask.width()), H = static_cast<long long>(mask.height());
  for (int y = 0; y < height; ++y) {
    const auto src_y = static_cast<int>((2LL * y + 1) * H / (2LL * height));
    for (int x = 0; x < width; ++x) {
      const auto src_x = static_cast<int>((2LL * x + 1) * W / (2LL * width));
      out.set(x, y, mask.at(src_x, src_y) != 0);
    }
  }
  return out;
}

BinaryMask merge_mask(const BinaryMask& obj_mask, const BBox& box, FrameSize frame) {
  if (!box.fits(frame)) throw ValidationError("merge_mask: box " + describe(box) + " out of frame");
  const BBox crop = obj_mask.support();  // throws on empty mask

  BinaryMask cropped(crop.w, crop.h);
  for (int y = 0; y < crop.h; ++y)
    for (int x = 0; x < crop.w; ++x) cropped.set(x, y, obj_mask.at(crop.x0 + x, crop.y0 + y) != 0);

  const BinaryMask resized = resize_nearest(cropped, box.w, box.h);
  BinaryMask out(frame.width, frame.height);
  for (int y = 0; y < box.h; ++y)
    for (int x = 0; x < box.w; ++x)
      if (resized.at(x, y)) out.set(box.x0 + x, box.y0 + y);
  return out;
}

BinaryMask interaction_mask(const BinaryMask& merged, const BinaryMask& traj) {
  require_same_size(merged, traj, "interaction_mask");
  BinaryMask out(traj.width(), traj.height());
  for (int y = 0; y < traj.height(); ++y)
    for (int x = 0; x < traj.width(); ++x) out.set(x, y, merged.at(x, y) != traj.at(x, y));
  return out;
}

RegionPartition partition(const BinaryMask& merged, const BinaryMask& traj) {
  require_same_size(merged, traj, "partition");
  if (!merged.subset_of(traj)) {
    throw ValidationError("partition: merged mask is not contained in the trajectory mask");
  }
  RegionPartition p;
  p.background = BinaryMask(traj.width(), traj.height());
  for (int y = 0; y < traj.height(); ++y)
    for (int x = 0; x < traj.width(); ++x) p.background.set(x, y, traj.at(x, y) == 0);
  p.interaction = interaction_mask(merged, traj);
  p.object = merged;
  return p;
}

}  // namespace dreaminsert
