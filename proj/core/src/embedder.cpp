#include "dreaminsert/embedder.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "dreaminsert/backend_registry.hpp"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/random.hpp"
#include "dreaminsert/text.hpp"

namespace dreaminsert {

namespace {

constexpr int kFeatureLen = ToyEmbedder::kGrid * ToyEmbedder::kGrid * Frame::kChannels + 1;

class PluginEmbedder final : public Embedder {
 public:
  PluginEmbedder(std::shared_ptr<PluginLibrary> lib, std::unique_ptr<Embedder> impl)
      : lib_(std::move(lib)), impl_(std::move(impl)) {}
  ~PluginEmbedder() override { impl_.reset(); }

  std::string id() const override { return impl_->id(); }
  int dim() const override { return impl_->dim(); }
  std::vector<double> image_embed(const Frame& f) const override { return impl_->image_embed(f); }
  std::vector<double> text_embed(const std::string& t) const override { return impl_->text_embed(t); }
  std::vector<double> video_embed(const Clip& c) const override { return impl_->video_embed(c); }

 private:
  std::shared_ptr<PluginLibrary> lib_;
  std::unique_ptr<Embedder> impl_;
};

}  // namespace

void normalize_in_place(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("cannot normalize a zero or non-finite embedding");
  for (double& x : v) x /= n;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0 && nb > 0.0)) throw ValidationError("cosine: zero vector");
  return dot / std::sqrt(na * nb);
}

std::vector<double> Embedder::video_embed(const Clip& clip) const {
  validate_clip(clip);
  std::vector<double> mean(static_cast<std::size_t>(dim()), 0.0);
  for (const auto& f : clip.frames) {
    const auto e = image_embed(f);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e[i];
  }
  normalize_in_place(mean);
  return mean;
}

std::vector<double> downsample_grid(const Frame& frame) {
  constexpr int G = ToyEmbedder::kGrid;
  const int W = frame.width(), H = frame.height();
  if (W < 1 || H < 1) throw ValidationError("downsample_grid: empty frame");
  std::vector<double> sum(G * G * Frame::kChannels, 0.0);
  std::vector<int> hits(G * G, 0);
  for (int y = 0; y < H; ++y) {
    const int gy = y * G / H;
    for (int x = 0; x < W; ++x) {
      const int gx = x * G / W;
      const int cell = gy * G + gx;
      ++hits[static_cast<std::size_t>(cell)];
      for (int c = 0; c < Frame::kChannels; ++c) sum[static_cast<std::size_t>(cell * 3 + c)] += frame.at(x, y, c);
    }
  }
  for (int gy = 0; gy < G; ++gy) {
    for (int gx = 0; gx < G; ++gx) {
      const int cell = gy * G + gx;
      const auto k = static_cast<std::size_t>(cell);
      if (hits[k] > 0) {
        for (int c = 0; c < 3; ++c) sum[k * 3 + static_cast<std::size_t>(c)] /= hits[k];
        continue;
      }
      const int sx = std::min(static_cast<int>((gx + 0.5) * W / G), W - 1);
      const int sy = std::min(static_cast<int>((gy + 0.5) * H / G), H - 1);
      for (int c = 0; c < 3; ++c) sum[k * 3 + static_cast<std::size_t>(c)] = frame.at(sx, sy, c);
    }
  }
  return sum;
}

ToyEmbedder::ToyEmbedder(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim < 2) throw ValidationError("toy embedder: dim must be >= 2");
  auto rng = seeded_engine(seed, static_cast<std::uint64_t>(dim), RngStream::embedder_params);
  std::normal_distribution<double> normal(0.0, 1.0);
  projection_.resize(static_cast<std::size_t>(dim) * kFeatureLen);
  for (auto& w : projection_) w = normal(rng);
}

std::vector<double> ToyEmbedder::image_embed(const Frame& frame) const {
  auto feat = downsample_grid(frame);
  for (double& v : feat) v -= 0.5;
  feat.push_back(1.0);
  std::vector<double> e(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t r = 0; r < e.size(); ++r) {
    const double* row = projection_.data() + r * kFeatureLen;
    double acc = 0.0;
    for (std::size_t k = 0; k < feat.size(); ++k) acc += row[k] * feat[k];
    e[r] = acc;
  }
  normalize_in_place(e);
  return e;
}

std::vector<double> ToyEmbedder::text_embed(const std::string& text) const {
  auto v = hashed_token_vector(text, dim_, seed_ + 0x9e3779b97f4a7c15ULL);
  normalize_in_place(v);
  return v;
}

std::unique_ptr<Embedder> make_embedder(const std::string& id, std::uint64_t seed,
                                        const std::filesystem::path& plugin_registry) {
  if (id == "toy") return std::make_unique<ToyEmbedder>(seed);
  constexpr std::string_view prefix = "external:";
  if (id.starts_with(prefix)) {
    const std::string adapter = id.substr(prefix.size());
    auto lib = std::make_shared<PluginLibrary>(
        resolve_plugin_library(plugin_registry_path(plugin_registry), "embedders", adapter));
    using Factory = Embedder* (*)(const char*);
    auto factory = reinterpret_cast<Factory>(lib->symbol(kEmbedderFactorySymbol));
    const std::string options = nlohmann::json{{"seed", seed}}.dump();
    std::unique_ptr<Embedder> impl(factory(options.c_str()));
    if (!impl) throw ValidationError("plugin '" + adapter + "' returned no embedder");
    return std::make_unique<PluginEmbedder>(std::move(lib), std::move(impl));
  }
  throw ValidationError("unknown embedder '" + id + "' (expected toy or external:<id>)");
}

}  // namespace dreaminsert
