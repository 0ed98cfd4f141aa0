#pragma once

#include <filesystem>
#include <string>

#include "dreaminsert/geometry.hpp"
#include "dreaminsert/image.hpp"

namespace dreaminsert {

/// 8-bit RGB PNG -> Frame in [0,1]. Gray/alpha inputs are converted by libpng.
Frame load_png(const std::filesystem::path& path);

/// Frame -> 8-bit RGB PNG. Values are clamped to [0,1] and rounded.
void save_png(const std::filesystem::path& path, const Frame& frame);

/// What save_png followed by load_png yields, without touching disk.
Frame quantize_8bit(const Frame& frame);
Clip quantize_8bit(const Clip& clip);

/// Single-channel PNG; any value >= 128 reads as 1.
BinaryMask load_mask_png(const std::filesystem::path& path);

/// Single-channel PNG with values 0 / 255.
void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// Canonical frame file name, e.g. frame_0007.png.
std::string frame_filename(std::size_t index, const std::string& prefix = "frame_");

/// Reads frame_0000.png, frame_0001.png, ... until the first gap.
Clip load_clip_dir(const std::filesystem::path& dir, double fps = 8.0);

/// Writes every frame as frame_####.png; creates the directory.
void save_clip_dir(const std::filesystem::path& dir, const Clip& clip);

}  // namespace dreaminsert
