#include "dreaminsert/image.hpp"

#include <algorithm>
#include <cmath>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

Frame::Frame(int width, int height, float fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("Frame: negative dimensions");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels,
                 fill);
}

FrameSize Clip::frame_size() const {
  if (frames.empty()) throw ValidationError("clip is empty");
  return frames.front().size();
}

void validate_clip(const Clip& clip) {
  if (clip.frames.empty()) throw ValidationError("clip has no frames");
  const FrameSize s = clip.frames.front().size();
  if (s.width < 1 || s.height < 1) throw ValidationError("clip frames are empty");
  for (const auto& f : clip.frames) {
    if (f.size() != s) throw ValidationError("clip frames have non-uniform dimensions");
  }
}

Frame resize_bilinear(const Frame& src, int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("resize_bilinear: target must be >= 1x1");
  if (src.width() < 1 || src.height() < 1) throw ValidationError("resize_bilinear: empty source");
  if (src.width() == width && src.height() == height) return src;

  Frame out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < Frame::kChannels; ++c) {
        const double top = (1.0 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c);
        const double bottom = (1.0 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

Frame crop(const Frame& src, const BBox& box) {
  if (!box.fits(src.size())) throw ValidationError("crop: box out of frame");
  Frame out(box.w, box.h);
  for (int y = 0; y < box.h; ++y)
    for (int x = 0; x < box.w; ++x)
      for (int c = 0; c < Frame::kChannels; ++c) out.at(x, y, c) = src.at(box.x0 + x, box.y0 + y, c);
  return out;
}

bool all_finite(const Frame& f) {
  return std::all_of(f.pixels().begin(), f.pixels().end(), [](float v) { return std::isfinite(v); });
}

bool all_finite(const Clip& c) {
  return std::all_of(c.frames.begin(), c.frames.end(), [](const Frame& f) { return all_finite(f); });
}

}  // namespace dreaminsert
