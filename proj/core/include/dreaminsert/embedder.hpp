#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dreaminsert/image.hpp"

namespace dreaminsert {

/// Maps frames, text and clips into one unit-norm embedding space.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<double> image_embed(const Frame& frame) const = 0;
  virtual std::vector<double> text_embed(const std::string& text) const = 0;
  /// Default: normalized mean of the frame embeddings.
  virtual std::vector<double> video_embed(const Clip& clip) const;
};

/// Deterministic stand-in for CLIP / DINO / ViClip-style encoders.
///  image: 8x8 area-average downsample, centred at 0.5, plus a bias entry,
///         through a seeded Gaussian projection, then L2-normalized.
///  text:  hashed bag-of-tokens projection, normalized.
///  video: mean of frame embeddings, normalized.
class ToyEmbedder final : public Embedder {
 public:
  static constexpr int kGrid = 8;

  explicit ToyEmbedder(std::uint64_t seed = 0, int dim = 64);

  std::string id() const override { return "toy"; }
  int dim() const override { return dim_; }
  std::vector<double> image_embed(const Frame& frame) const override;
  std::vector<double> text_embed(const std::string& text) const override;

 private:
  std::uint64_t seed_;
  int dim_;
  std::vector<double> projection_;  // dim x (8*8*3 + 1)
};

/// 8x8 per-channel area averages (pixel-centre assignment to cells; cells no
/// pixel falls into take the nearest pixel). Length 8*8*3, cell-major.
std::vector<double> downsample_grid(const Frame& frame);

double cosine(std::span<const double> a, std::span<const double> b);
void normalize_in_place(std::vector<double>& v);

/// "toy" or "external:<adapter-id>". External adapters receive {"seed": seed}
/// and export
///   extern "C" dreaminsert::Embedder* dreaminsert_create_embedder(const char* options_json);
inline constexpr const char* kEmbedderFactorySymbol = "dreaminsert_create_embedder";

std::unique_ptr<Embedder> make_embedder(const std::string& id, std::uint64_t seed = 0,
                                        const std::filesystem::path& plugin_registry = {});

}  // namespace dreaminsert
