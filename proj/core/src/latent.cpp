#include "dreaminsert/latent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "latent dumps assume a little-endian host");

LatentClip::LatentClip(std::size_t frames, LatentShape shape, double fill)
    : frames_(frames), shape_(shape) {
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
    throw ValidationError("LatentClip: shape must be positive");
  }
  data_.assign(frames * shape.size(), fill);
}

std::span<double> LatentClip::frame(std::size_t n) {
  if (n >= frames_) throw ValidationError("LatentClip: frame index out of range");
  return std::span<double>(data_).subspan(n * shape_.size(), shape_.size());
}

std::span<const double> LatentClip::frame(std::size_t n) const {
  if (n >= frames_) throw ValidationError("LatentClip: frame index out of range");
  return std::span<const double>(data_).subspan(n * shape_.size(), shape_.size());
}

LatentClip LatentClip::slice(std::size_t n) const {
  LatentClip one(1, shape_);
  const auto src = frame(n);
  std::copy(src.begin(), src.end(), one.data_.begin());
  return one;
}

void LatentClip::assign(std::size_t n, const LatentClip& one) {
  if (one.frames_ != 1 || one.shape_ != shape_) throw ValidationError("LatentClip::assign: layout mismatch");
  const auto dst = frame(n);
  std::copy(one.data_.begin(), one.data_.end(), dst.begin());
}

bool LatentClip::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void write_latent_dump(const fs::path& stem, const LatentClip& latents, const std::string& schedule_hash) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  const auto& s = latents.shape();
  const nlohmann::json header = {
      {"shape", {latents.frames(), s.channels, s.height, s.width}},
      {"dtype", "float32"},
      {"byte_order", "little"},
      {"schedule_hash", schedule_hash},
  };
  fs::path json_path = stem;
  json_path += ".json";
  fs::path bin_path = stem;
  bin_path += ".bin";
  std::ofstream(json_path) << header.dump(2) << '\n';

  std::vector<float> buf(latents.values().size());
  std::transform(latents.values().begin(), latents.values().end(), buf.begin(),
                 [](double v) { return static_cast<float>(v); });
  std::ofstream bin(bin_path, std::ios::binary);
  bin.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!bin) throw std::runtime_error("cannot write " + bin_path.string());
}

LatentClip read_latent_dump(const fs::path& stem, std::string* schedule_hash) {
  fs::path json_path = stem;
  json_path += ".json";
  fs::path bin_path = stem;
  bin_path += ".bin";
  std::ifstream hin(json_path);
  if (!hin) throw ValidationError("missing latent header " + json_path.string());
  nlohmann::json header;
  hin >> header;
  if (header.at("dtype") != "float32") throw ValidationError("latent dump: unsupported dtype");
  const auto shape = header.at("shape").get<std::vector<long long>>();
  if (shape.size() != 4) throw ValidationError("latent dump: shape must have 4 entries");
  LatentClip out(static_cast<std::size_t>(shape[0]),
                 {static_cast<int>(shape[1]), static_cast<int>(shape[2]), static_cast<int>(shape[3])});
  std::vector<float> buf(out.values().size());
  std::ifstream bin(bin_path, std::ios::binary);
  bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!bin) throw ValidationError("latent dump: truncated payload " + bin_path.string());
  std::copy(buf.begin(), buf.end(), out.values().begin());
  if (schedule_hash) *schedule_hash = header.value("schedule_hash", "");
  return out;
}

}  // namespace dreaminsert
