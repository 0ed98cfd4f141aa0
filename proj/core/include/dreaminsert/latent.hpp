#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dreaminsert {

struct LatentShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(channels) * plane(); }

  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

/// N x C x h x w latents in double precision, frame-major.
class LatentClip {
 public:
  LatentClip() = default;
  LatentClip(std::size_t frames, LatentShape shape, double fill = 0.0);

  std::size_t frames() const noexcept { return frames_; }
  const LatentShape& shape() const noexcept { return shape_; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::span<double> frame(std::size_t n);
  std::span<const double> frame(std::size_t n) const;

  double& at(std::size_t n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  double at(std::size_t n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  /// Single-frame clip holding a copy of frame n.
  LatentClip slice(std::size_t n) const;
  /// Copies a single-frame clip into frame n.
  void assign(std::size_t n, const LatentClip& one);

  bool all_finite() const;
  bool same_layout(const LatentClip& other) const noexcept {
    return frames_ == other.frames_ && shape_ == other.shape_;
  }

  friend bool operator==(const LatentClip&, const LatentClip&) = default;

 private:
  std::size_t offset(std::size_t n, int c, int y, int x) const noexcept {
    return n * shape_.size() + static_cast<std::size_t>(c) * shape_.plane() +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
           static_cast<std::size_t>(x);
  }

  std::size_t frames_ = 0;
  LatentShape shape_;
  std::vector<double> data_;
};

/// Debug dump: `<stem>.bin` holds little-endian float32 values and
/// `<stem>.json` the header {shape:[N,C,h,w], dtype:"float32", schedule_hash}.
void write_latent_dump(const std::filesystem::path& stem, const LatentClip& latents,
                       const std::string& schedule_hash);
LatentClip read_latent_dump(const std::filesystem::path& stem, std::string* schedule_hash = nullptr);

}  // namespace dreaminsert
