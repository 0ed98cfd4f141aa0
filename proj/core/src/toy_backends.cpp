#include "dreaminsert/toy_backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dreaminsert/errors.hpp"
#include "dreaminsert/random.hpp"
#include "dreaminsert/text.hpp"

namespace dreaminsert {

namespace {

void softmax_rows(std::vector<double>& scores, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = scores.data() + offset + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
  }
}

void call_hook(SiteHook* hook, Site site, const StepContext& ctx, std::vector<double>& values) {
  if (!hook) return;
  const std::size_t n = values.size();
  hook->at_site(site, ctx, values);
  if (values.size() != n) {
    throw ValidationError("site hook resized activations of " + std::string(site_name(site)));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Codecs

LatentClip IdentityCodec::encode(const Frame& frame) const {
  LatentClip z(1, latent_shape(frame.size()));
  for (int c = 0; c < Frame::kChannels; ++c)
    for (int y = 0; y < frame.height(); ++y)
      for (int x = 0; x < frame.width(); ++x) z.at(0, c, y, x) = frame.at(x, y, c);
  return z;
}

Frame IdentityCodec::decode(const LatentClip& latents, std::size_t n) const {
  const auto& s = latents.shape();
  if (s.channels != Frame::kChannels) throw ValidationError("identity codec: latents must have 3 channels");
  Frame f(s.width, s.height);
  for (int c = 0; c < Frame::kChannels; ++c)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) f.at(x, y, c) = static_cast<float>(latents.at(n, c, y, x));
  return f;
}

PoolCodec::PoolCodec(int factor, int channels) : factor_(factor), channels_(channels) {
  if (factor < 1) throw ValidationError("pool codec: factor must be >= 1");
  if (channels < Frame::kChannels) throw ValidationError("pool codec: need at least 3 channels");
}

LatentClip PoolCodec::encode(const Frame& frame) const {
  const LatentShape shape = latent_shape(frame.size());
  LatentClip z(1, shape);
  const double inv_area = 1.0 / (static_cast<double>(factor_) * factor_);
  for (int ly = 0; ly < shape.height; ++ly) {
    for (int lx = 0; lx < shape.width; ++lx) {
      double rgb[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy < factor_; ++dy)
        for (int dx = 0; dx < factor_; ++dx)
          for (int c = 0; c < 3; ++c) rgb[c] += frame.at(lx * factor_ + dx, ly * factor_ + dy, c);
      for (double& v : rgb) v *= inv_area;
      const double luma = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
      for (int c = 0; c < channels_; ++c) z.at(0, c, ly, lx) = 2.0 * (c < 3 ? rgb[c] : luma) - 1.0;
    }
  }
  return z;
}

Frame PoolCodec::decode(const LatentClip& latents, std::size_t n) const {
  const auto& s = latents.shape();
  if (s.channels != channels_) throw ValidationError("pool codec: channel count mismatch");
  Frame f(s.width * factor_, s.height * factor_);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      for (int c = 0; c < 3; ++c)
        f.at(x, y, c) = static_cast<float>((latents.at(n, c, y / factor_, x / factor_) + 1.0) * 0.5);
  return f;
}

// ---------------------------------------------------------------------------
// Backends

ToyBackend::ToyBackend(std::string id, NoiseSchedule schedule, std::unique_ptr<Codec> codec)
    : id_(std::move(id)), schedule_(std::move(schedule)), codec_(std::move(codec)) {
  if (!codec_) throw ValidationError("toy backend: codec is required");
}

ZeroNoiseBackend::ZeroNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec)
    : ToyBackend("toy-zero", std::move(schedule), std::move(codec)) {}

LatentClip ZeroNoiseBackend::predict_noise(const LatentClip& z, int, const Condition&, const StepContext&,
                                           SiteHook*) {
  return LatentClip(z.frames(), z.shape(), 0.0);
}

ConstantNoiseBackend::ConstantNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec, double value)
    : ToyBackend("toy-const", std::move(schedule), std::move(codec)), value_(value) {}

LatentClip ConstantNoiseBackend::predict_noise(const LatentClip& z, int, const Condition&, const StepContext&,
                                               SiteHook*) {
  return LatentClip(z.frames(), z.shape(), value_);
}

LinearNoiseBackend::LinearNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec,
                                       LinearPredictorParams params, std::string id)
    : ToyBackend(std::move(id), std::move(schedule), std::move(codec)), params_(std::move(params)) {
  const auto C = static_cast<std::size_t>(this->codec().channels());
  if (params_.spatial_gain < 0 || params_.temporal_gain < 0 || params_.spatial_gain + params_.temporal_gain > 1.0) {
    throw ValidationError("toy-linear: attention gains must be non-negative and sum to at most 1");
  }
  if (params_.channel_mix) {
    if (params_.channel_mix->size() != C * C) throw ValidationError("toy-linear: channel_mix must be C x C");
    mix_ = *params_.channel_mix;
    return;
  }
  auto rng = seeded_engine(params_.seed, C, RngStream::backend_params);
  std::normal_distribution<double> normal(0.0, 1.0);
  mix_.resize(C * C);
  double frob = 0.0;
  for (auto& w : mix_) {
    w = normal(rng);
    frob += w * w;
  }
  frob = std::sqrt(frob);
  for (auto& w : mix_) w *= params_.lipschitz / frob;
}

std::vector<Site> LinearNoiseBackend::sites() const {
  return {Site::spatial_feature, Site::spatial_attention, Site::temporal_attention};
}

std::vector<double> LinearNoiseBackend::condition_bias(const Condition& cond) const {
  const int C = codec().channels();
  std::vector<double> bias(static_cast<std::size_t>(C), 0.0);
  if (params_.condition_gain == 0.0) return bias;
  if (!cond.text.empty()) {
    auto v = hashed_token_vector(cond.text, C, params_.seed);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (int c = 0; c < C; ++c) bias[static_cast<std::size_t>(c)] += params_.condition_gain * v[static_cast<std::size_t>(c)] / norm;
  }
  if (cond.first_frame) {
    const LatentClip ref = codec().encode(*cond.first_frame);
    const auto P = static_cast<double>(ref.shape().plane());
    for (int c = 0; c < C; ++c) {
      double mean = 0.0;
      for (int y = 0; y < ref.shape().height; ++y)
        for (int x = 0; x < ref.shape().width; ++x) mean += ref.at(0, c, y, x);
      bias[static_cast<std::size_t>(c)] += params_.condition_gain * mean / P;
    }
  }
  return bias;
}

LatentClip LinearNoiseBackend::predict_noise(const LatentClip& z, int t, const Condition& cond,
                                             const StepContext& ctx, SiteHook* hook) {
  const std::size_t N = z.frames();
  const auto C = static_cast<std::size_t>(z.shape().channels);
  const std::size_t P = z.shape().plane();
  if (C * C != mix_.size()) throw ValidationError("toy-linear: latent channel count differs from the codec");
  const auto zv = z.values();

  // spatial feature: per-pixel channel mix
  std::vector<double> f(N * C * P, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t a = 0; a < C; ++a) {
      double* out = f.data() + (n * C + a) * P;
      for (std::size_t b = 0; b < C; ++b) {
        const double w = mix_[a * C + b];
        const double* in = zv.data() + (n * C + b) * P;
        for (std::size_t p = 0; p < P; ++p) out[p] += w * in[p];
      }
    }
  call_hook(hook, Site::spatial_feature, ctx, f);

  // spatial attention over channels, per frame
  std::vector<double> s_scores(N * C * C, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t a = 0; a < C; ++a)
      for (std::size_t b = 0; b < C; ++b) {
        const double* fa = f.data() + (n * C + a) * P;
        const double* fb = f.data() + (n * C + b) * P;
        double dot = 0.0;
        for (std::size_t p = 0; p < P; ++p) dot += fa[p] * fb[p];
        s_scores[(n * C + a) * C + b] = params_.score_scale * dot / static_cast<double>(P);
      }
  call_hook(hook, Site::spatial_attention, ctx, s_scores);
  softmax_rows(s_scores, N * C, C);

  // temporal attention over frames
  std::vector<double> t_scores(N * N, 0.0);
  const std::size_t frame_len = C * P;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const double* fi = f.data() + i * frame_len;
      const double* fj = f.data() + j * frame_len;
      double dot = 0.0;
      for (std::size_t k = 0; k < frame_len; ++k) dot += fi[k] * fj[k];
      t_scores[i * N + j] = params_.score_scale * dot / static_cast<double>(frame_len);
    }
  call_hook(hook, Site::temporal_attention, ctx, t_scores);
  softmax_rows(t_scores, N, N);

  const double gs = params_.spatial_gain;
  const double gt = params_.temporal_gain;
  const double gf = 1.0 - gs - gt;
  auto bias = condition_bias(cond);
  const double signal = schedule().alpha_bar(t);
  for (double& b : bias) b *= signal;

  LatentClip eps(N, z.shape());
  auto ev = eps.values();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t a = 0; a < C; ++a) {
      double* out = ev.data() + (n * C + a) * P;
      const double* fa = f.data() + (n * C + a) * P;
      for (std::size_t p = 0; p < P; ++p) out[p] = gf * fa[p] + bias[a];
      if (gs != 0.0) {
        for (std::size_t b = 0; b < C; ++b) {
          const double w = gs * s_scores[(n * C + a) * C + b];
          const double* fb = f.data() + (n * C + b) * P;
          for (std::size_t p = 0; p < P; ++p) out[p] += w * fb[p];
        }
      }
      if (gt != 0.0) {
        for (std::size_t j = 0; j < N; ++j) {
          const double w = gt * t_scores[n * N + j];
          const double* fj = f.data() + (j * C + a) * P;
          for (std::size_t p = 0; p < P; ++p) out[p] += w * fj[p];
        }
      }
    }
  return eps;
}

ReplayNoiseBackend::ReplayNoiseBackend(NoiseSchedule schedule, std::unique_ptr<Codec> codec,
                                       LinearPredictorParams params)
    : LinearNoiseBackend(std::move(schedule), std::move(codec), std::move(params), "toy-replay") {}

LatentClip ReplayNoiseBackend::predict_noise(const LatentClip& z, int t, const Condition& cond,
                                             const StepContext& ctx, SiteHook* hook) {
  LatentClip eps = LinearNoiseBackend::predict_noise(z, t, cond, ctx, hook);
  const auto key = std::make_tuple(ctx.stream, std::min(ctx.t_from, ctx.t_to), std::max(ctx.t_from, ctx.t_to));
  switch (ctx.pass) {
    case Pass::inversion:
      tape_.insert_or_assign(key, eps);
      break;
    case Pass::sampling:
      if (auto it = tape_.find(key); it != tape_.end() && it->second.same_layout(z)) return it->second;
      break;
    case Pass::probe:
      break;
  }
  return eps;
}

}  // namespace dreaminsert
