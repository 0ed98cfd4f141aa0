#include "dreaminsert/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

namespace fs = std::filesystem;

namespace {

struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::vector<png_byte> read_png(const fs::path& path, png_uint_32 format, int& width, int& height) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw ValidationError("cannot read PNG " + path.string() + ": " + png.image.message);
  }
  png.image.format = format;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
    throw ValidationError("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  width = static_cast<int>(png.image.width);
  height = static_cast<int>(png.image.height);
  return buffer;
}

void write_png(const fs::path& path, png_uint_32 format, int width, int height,
               const std::vector<png_byte>& buffer) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

png_byte quantize(float v) {
  const float c = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
  return static_cast<png_byte>(std::lround(c * 255.0f));
}

}  // namespace

Frame load_png(const fs::path& path) {
  int w = 0, h = 0;
  const auto buffer = read_png(path, PNG_FORMAT_RGB, w, h);
  Frame f(w, h);
  auto px = f.pixels();
  for (std::size_t i = 0; i < buffer.size(); ++i) px[i] = static_cast<float>(buffer[i]) / 255.0f;
  return f;
}

Frame quantize_8bit(const Frame& frame) {
  Frame out(frame.width(), frame.height());
  auto dst = out.pixels();
  const auto src = frame.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(quantize(src[i])) / 255.0f;
  return out;
}

Clip quantize_8bit(const Clip& clip) {
  Clip out{{}, clip.fps};
  out.frames.reserve(clip.size());
  for (const auto& f : clip.frames) out.frames.push_back(quantize_8bit(f));
  return out;
}

void save_png(const fs::path& path, const Frame& frame) {
  std::vector<png_byte> buffer(frame.pixels().size());
  std::transform(frame.pixels().begin(), frame.pixels().end(), buffer.begin(), quantize);
  write_png(path, PNG_FORMAT_RGB, frame.width(), frame.height(), buffer);
}

BinaryMask load_mask_png(const fs::path& path) {
  int w = 0, h = 0;
  const auto buffer = read_png(path, PNG_FORMAT_GRAY, w, h);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, buffer[static_cast<std::size_t>(y) * w + x] >= 128);
  return m;
}

void save_mask_png(const fs::path& path, const BinaryMask& mask) {
  std::vector<png_byte> buffer(mask.bits().size());
  std::transform(mask.bits().begin(), mask.bits().end(), buffer.begin(),
                 [](std::uint8_t b) { return static_cast<png_byte>(b ? 255 : 0); });
  write_png(path, PNG_FORMAT_GRAY, mask.width(), mask.height(), buffer);
}

std::string frame_filename(std::size_t index, const std::string& prefix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return prefix + buf + ".png";
}

Clip load_clip_dir(const fs::path& dir, double fps) {
  if (!fs::is_directory(dir)) throw ValidationError("clip directory not found: " + dir.string());
  Clip clip;
  clip.fps = fps;
  for (std::size_t i = 0;; ++i) {
    const fs::path p = dir / frame_filename(i);
    if (!fs::exists(p)) break;
    clip.frames.push_back(load_png(p));
  }
  if (clip.frames.empty()) throw ValidationError("no frame_0000.png in " + dir.string());
  validate_clip(clip);
  return clip;
}

void save_clip_dir(const fs::path& dir, const Clip& clip) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) save_png(dir / frame_filename(i), clip.frames[i]);
}

}  // namespace dreaminsert
