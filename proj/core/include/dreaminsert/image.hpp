#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dreaminsert/geometry.hpp"

namespace dreaminsert {

/// RGB frame, interleaved row-major (HWC), float values. Loaded frames are in
/// [0,1]; intermediate stages (pixel noise) may leave that range.
class Frame {
 public:
  static constexpr int kChannels = 3;

  Frame() = default;
  Frame(int width, int height, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  FrameSize size() const noexcept { return {width_, height_}; }

  float& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
  float at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

  std::span<float> pixels() noexcept { return pixels_; }
  std::span<const float> pixels() const noexcept { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

struct Clip {
  std::vector<Frame> frames;
  double fps = 8.0;  // metadata only

  std::size_t size() const noexcept { return frames.size(); }
  FrameSize frame_size() const;
};

/// Throws ValidationError unless the clip is non-empty with uniform frame size.
void validate_clip(const Clip& clip);

/// Bilinear resize with half-pixel centres and edge clamping. No prefilter.
Frame resize_bilinear(const Frame& src, int width, int height);

Frame crop(const Frame& src, const BBox& box);

bool all_finite(const Frame& f);
bool all_finite(const Clip& c);

}  // namespace dreaminsert
