// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "dreaminsert/compositor.hpp"
#include "dreaminsert/ddim.hpp"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/image_io.hpp"
#include "dreaminsert/metrics.hpp"
#include "dreaminsert/pipeline.hpp"
#include "dreaminsert/pixel_noise.hpp"
#include "dreaminsert/stage1_latent.hpp"
#include "dreaminsert/stage2_align.hpp"
#include "dreaminsert/toy_backends.hpp"
#include "oracles.hpp"
#include "test_env.hpp"

using namespace dreaminsert;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Clip random_clip(std::mt19937_64& rng, int n, int w, int h) {
  Clip c;
  for (int i = 0; i < n; ++i) c.frames.push_back(oracle::random_frame(rng, w, h));
  return c;
}

LatentClip random_latents(std::mt19937_64& rng, std::size_t n, LatentShape s) {
  std::normal_distribution<double> g;
  LatentClip z(n, s);
  for (double& v : z.values()) v = g(rng);
  return z;
}

double max_abs_diff(const LatentClip& a, const LatentClip& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

double max_abs_diff(const Frame& a, const Frame& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) m = std::max(m, std::abs(double(a.pixels()[i]) - b.pixels()[i]));
  return m;
}

InjectionSchedule counts(int f, int s, int t) {
  InjectionSchedule sch;
  sch.feature_steps = f;
  sch.spatial_attn_steps = s;
  sch.temporal_attn_steps = t;
  return sch;
}

ReplayNoiseBackend replay_backend() {
  return ReplayNoiseBackend(NoiseSchedule::linear_beta(), std::make_unique<IdentityCodec>(), LinearPredictorParams{});
}

// 1. Region masks partition every frame; IA = traj xor merged; 200+ random pairs in under 5 s.
void mask_algebra(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  int pairs = 0;
  for (; pairs < 250; ++pairs) {
    const int W = 2 + static_cast<int>(rng() % 60), H = 2 + static_cast<int>(rng() % 60);
    const BBox b = oracle::random_box(rng, W, H);
    const auto obj = oracle::random_mask(rng, 1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 20), 0.5);
    const auto traj = rasterize(b, {W, H});
    const auto merged = merge_mask(obj, b, {W, H});
    const auto p = partition(merged, traj);
    bool ok = merged.subset_of(traj) && p.trajectory() == traj;
    for (int y = 0; y < H && ok; ++y)
      for (int x = 0; x < W && ok; ++x) {
        ok = p.background.at(x, y) + p.interaction.at(x, y) + p.object.at(x, y) == 1 &&
             p.interaction.at(x, y) == (traj.at(x, y) ^ merged.at(x, y)) && p.object.at(x, y) == merged.at(x, y);
      }
    o.require(ok, "pair " + std::to_string(pairs));
  }
  const double dt = seconds_since(t0);
  o.require(dt < 5.0, "time budget");
  o.detail << pairs << " pairs in " << dt << " s";
}

// 2. Composited frames keep the background bit-exact outside the object.
void compositor_background(Outcome& o) {
  std::mt19937_64 rng(202);
  int cases = 0;
  while (cases < 60) {
    const int W = 16 + static_cast<int>(rng() % 33), H = 16 + static_cast<int>(rng() % 33);
    const int n = 1 + static_cast<int>(rng() % 4);
    const Clip bg = random_clip(rng, n, W, H);
    const int ow = 4 + static_cast<int>(rng() % 12);
    const ObjectAsset asset{oracle::random_frame(rng, ow, ow), oracle::random_mask(rng, ow, ow, 0.6)};
    TrajectorySequence traj;
    traj.frame = {W, H};
    for (int i = 0; i < n; ++i) traj.boxes.push_back(oracle::random_box(rng, W, H, 4));
    CopySequence seq;
    try {
      seq = make_copy_sequence(asset, bg, traj);
    } catch (const ValidationError&) {
      continue;
    }
    ++cases;
    for (int i = 0; i < n; ++i) {
      const auto& p = seq.partitions[static_cast<std::size_t>(i)];
      bool ok = true;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          for (int c = 0; c < 3; ++c) {
            if (!p.object.at(x, y)) ok = ok && seq.clip.frames[i].at(x, y, c) == bg.frames[i].at(x, y, c);
          }
      o.require(ok, "case " + std::to_string(cases));
    }
  }
  o.detail << cases << " cases";
}

// 3. Pixel noise: sigma 0 is the identity, interaction variance sigma1^2, background exact.
void pixel_noise(Outcome& o) {
  std::mt19937_64 rng(303);
  const Clip c = random_clip(rng, 3, 24, 18);
  BinaryMask traj(24, 18), obj(24, 18);
  for (int y = 0; y < 18; ++y)
    for (int x = 0; x < 24; ++x) traj.set(x, y, x >= 8), obj.set(x, y, x >= 16);
  const std::vector<RegionPartition> parts(3, partition(obj, traj));
  NoiseConfig zero;
  zero.sigma1 = zero.sigma2 = 0.0;
  o.require(inject_pixel_noise(c, parts, zero).frames == c.frames, "sigma 0 identity");

  NoiseConfig cfg;
  const Clip noisy = inject_pixel_noise(c, parts, cfg);
  bool bg_exact = true;
  for (int n = 0; n < 3; ++n)
    for (int y = 0; y < 18; ++y)
      for (int x = 0; x < 8; ++x)
        for (int ch = 0; ch < 3; ++ch) bg_exact = bg_exact && noisy.frames[n].at(x, y, ch) == c.frames[n].at(x, y, ch);
  o.require(bg_exact, "background exact");

  const int W = 100, H = 100;
  const Clip flat{{Frame(W, H, 0.5f)}, 8.0};
  const std::vector<RegionPartition> ia{partition(BinaryMask(W, H), BinaryMask::filled(W, H))};
  cfg.sigma1 = 0.4;
  cfg.seed = 11;
  const Clip out = inject_pixel_noise(flat, ia, cfg);
  std::vector<double> xs;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) xs.push_back(out.frames[0].at(x, y, 0));
  const double var = oracle::moments(xs).var;
  o.require(std::abs(var - 0.16) <= 0.05 * 0.16, "variance");
  o.detail << "IA variance " << var;
}

// 4. DDIM: constant predictor round trip within 1e-6; linear round-trip error shrinks with the step.
void ddim_round_trip(Outcome& o) {
  std::mt19937_64 rng(404);
  ConstantNoiseBackend k(NoiseSchedule::linear_beta(), std::make_unique<IdentityCodec>(), 0.37);
  const LatentClip z = random_latents(rng, 1, {3, 6, 6});
  double zmax = 0;
  for (double v : z.values()) zmax = std::max(zmax, std::abs(v));
  const auto grid = timestep_grid(k.schedule(), 50);
  const LatentClip rec =
      sample_sequence(invert_sequence(z, {}, k, grid, Granularity::whole_clip), {}, k, grid, Granularity::whole_clip);
  const double rel = max_abs_diff(rec, z) / zmax;
  o.require(rel <= 1e-6, "constant round trip");

  LinearPredictorParams p;
  p.spatial_gain = p.temporal_gain = p.condition_gain = 0.0;
  p.seed = 4;
  LinearNoiseBackend lin(NoiseSchedule::linear_beta(), std::make_unique<IdentityCodec>(), p);
  auto error = [&](int steps) {
    const auto g = timestep_grid(lin.schedule(), steps);
    return max_abs_diff(
        sample_sequence(invert_sequence(z, {}, lin, g, Granularity::whole_clip), {}, lin, g, Granularity::whole_clip), z);
  };
  const double e50 = error(50), e100 = error(100);
  o.require(e100 <= 0.6 * e50, "linear convergence");
  o.detail << "constant rel " << rel << ", linear e100/e50 " << e100 / e50;
}

// 5. Forward-noise moments within three standard errors at t = 100, 500, 900.
void forward_moments(Outcome& o) {
  const auto s = NoiseSchedule::linear_beta();
  std::mt19937_64 rng(505);
  const double z0 = 0.7;
  const std::size_t n = 10000;
  for (int t : {100, 500, 900}) {
    const LatentClip base(1, {1, 100, 100}, z0);
    const LatentClip zt = forward_noise(base, t, random_latents(rng, 1, {1, 100, 100}), s);
    const auto m = oracle::moments(std::vector<double>(zt.values().begin(), zt.values().end()));
    const double a = s.alpha_bar(t);
    const double zm = (m.mean - std::sqrt(a) * z0) / std::sqrt((1 - a) / n);
    const double zv = (m.var - (1 - a)) / ((1 - a) * std::sqrt(2.0 / (n - 1)));
    o.require(std::abs(zm) < 3 && std::abs(zv) < 3, "t=" + std::to_string(t));
    o.detail << "t" << t << " z(mean) " << zm << " z(var) " << zv << "; ";
  }
}

// 6. LN-Inj under exact replay: empty IA reconstructs; non-empty IA changes only the IA.
void latent_noise_locality(Outcome& o) {
  std::mt19937_64 rng(606);
  const Clip c = random_clip(rng, 3, 16, 12);
  auto ia_columns = [](int x0, int x1) {
    BinaryMask traj(16, 12);
    for (int y = 0; y < 12; ++y)
      for (int x = x0; x < x1; ++x) traj.set(x, y);
    return partition(BinaryMask(16, 12), traj);
  };
  auto replay = replay_backend();
  const auto empty = run_ln_inj(c, std::vector<RegionPartition>(3, ia_columns(0, 0)), {"obj", std::nullopt}, replay, {});
  double e = 0;
  for (std::size_t n = 0; n < 3; ++n) e = std::max(e, max_abs_diff(empty.coarse.frames[n], c.frames[n]));
  o.require(e <= 1e-4, "empty IA reconstruction");

  auto replay2 = replay_backend();
  const auto some = run_ln_inj(c, std::vector<RegionPartition>(3, ia_columns(4, 9)), {"obj", std::nullopt}, replay2, {});
  double outside = 0, inside = 0;
  for (std::size_t n = 0; n < 3; ++n)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 16; ++x)
        for (int ch = 0; ch < 3; ++ch) {
          const double d = std::abs(double(some.coarse.frames[n].at(x, y, ch)) - c.frames[n].at(x, y, ch));
          (x >= 4 && x < 9 ? inside : outside) = std::max(x >= 4 && x < 9 ? inside : outside, d);
        }
  o.require(outside <= 1e-4, "changes outside IA");
  o.require(inside > 1e-2, "IA unchanged");
  o.detail << "empty-IA err " << e << ", outside-IA err " << outside << ", inside-IA change " << inside;
}

// 7. Injection: zero counts equal plain sampling, self-injection is a fixed point,
//    cross-clip injection pins the first five steps.
void injection(Outcome& o) {
  std::mt19937_64 rng(707);
  const Clip a = random_clip(rng, 3, 8, 8), b = random_clip(rng, 3, 8, 8);
  LinearPredictorParams p;
  p.seed = 2;
  LinearNoiseBackend be(NoiseSchedule::linear_beta(), std::make_unique<IdentityCodec>(), p);
  const auto none = counts(0, 0, 0);

  const auto inv_a = invert_video(a, be, none);
  const Clip plain_align = align(inv_a.zeta, a.frames[0], "p", inv_a.recorded, none, be);
  const Clip plain = decode_clip(
      be.codec(), sample_sequence(inv_a.zeta, {"p", a.frames[0]}, be, inv_a.grid, Granularity::whole_clip));
  o.require(plain_align.frames == plain.frames, "zero counts bit-identical");

  SiteTrace trace;
  const Clip base = align(inv_a.zeta, a.frames[0], "p", inv_a.recorded, none, be, &trace);
  const Clip self = align(inv_a.zeta, a.frames[0], "p", trace.features(), counts(50, 50, 50), be);
  o.require(self.frames == base.frames, "self-injection fixed point");

  const auto sch = counts(5, 5, 5);
  const auto rec_a = invert_video(a, be, sch);
  const auto inv_b = invert_video(b, be, none);
  SiteTrace cross;
  (void)align(inv_b.zeta, b.frames[0], "p", rec_a.recorded, sch, be, &cross);
  bool pinned = true;
  for (Site s : kAllSites)
    for (int step = 1; step <= 5; ++step) {
      const auto* got = cross.features().find(s, step);
      const auto* want = rec_a.recorded.find(s, step);
      pinned = pinned && got && want && *got == *want;
    }
  o.require(pinned, "cross-clip steps 1..5 equal the records");
  SiteTrace free_a;
  (void)align(inv_a.zeta, a.frames[0], "p", inv_a.recorded, none, be, &free_a);
  const auto* s6 = cross.features().find(Site::spatial_feature, 6);
  const auto* f6 = free_a.features().find(Site::spatial_feature, 6);
  o.require(s6 && f6 && *s6 != *f6, "step 6 runs free");
  o.detail << "steps 1..5 pinned on " << std::size(kAllSites) << " sites, step 6 free";
}

// 8. Adv-ViClip: distribution sums to 1, symmetric prompts split 0.5, library order
//    permutes only, argmax survives positive rescaling.
void adv_viclip_properties(Outcome& o) {
  class Symmetric final : public Embedder {
   public:
    std::string id() const override { return "sym"; }
    int dim() const override { return 3; }
    std::vector<double> image_embed(const Frame&) const override { return {1, 0, 0}; }
    std::vector<double> text_embed(const std::string& t) const override {
      const double c = std::cos(0.4), s = std::sin(0.4);
      return t == "opt" ? std::vector<double>{c, s, 0} : std::vector<double>{c, -s, 0};
    }
    std::vector<double> video_embed(const Clip&) const override { return {1, 0, 0}; }
  } sym;
  const Clip still{{Frame(8, 8, 0.2f)}, 8.0};
  const double half = adv_viclip(still, "x", PromptLibrary({{"x", "opt", "fake"}}), sym);
  o.require(std::abs(half - 0.5) <= 1e-9, "symmetric 0.5");

  std::mt19937_64 rng(808);
  const ToyEmbedder emb(9);
  const PromptLibrary lib({{"a", "a red ball", "a still ball"}, {"b", "a blue cube", "a cube at rest"}});
  const PromptLibrary swapped({lib.entries()[1], lib.entries()[0]});
  double worst_sum = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Clip v = random_clip(rng, 2, 16, 16);
    const auto d = adv_viclip_distribution(v, lib, emb, 50.0);
    double sum = 0;
    for (const auto& p : d) sum += p.probability;
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    o.require(std::abs(adv_viclip(v, "a", swapped, emb, 50.0) - adv_viclip(v, "a", lib, emb, 50.0)) <= 1e-12,
              "permutation");
  }
  o.require(worst_sum <= 1e-9, "sum to one");

  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(6);
    for (auto& v : s) v = u(rng);
    const auto p1 = scaled_softmax(s, 10.0), p2 = scaled_softmax(s, 37.0);
    o.require(std::max_element(p1.begin(), p1.end()) - p1.begin() ==
                  std::max_element(p2.begin(), p2.end()) - p2.begin(),
              "argmax under rescaling");
  }
  o.detail << "max |sum-1| " << worst_sum << ", symmetric " << half;
}

// 9. DINO-bbox of the copy sequence against its own object is 1.
void dino_copy(Outcome& o) {
  std::mt19937_64 rng(909);
  const Frame obj = oracle::random_frame(rng, 12, 10);
  const ObjectAsset asset{obj, BinaryMask::filled(12, 10)};
  const Clip bg = random_clip(rng, 5, 48, 40);
  TrajectorySequence traj{{{0, 0, 12, 10}, {5, 6, 12, 10}, {20, 10, 12, 10}, {30, 25, 12, 10}, {36, 30, 12, 10}},
                          {48, 40}};
  const auto copy = make_copy_sequence(asset, bg, traj);
  const ToyEmbedder emb(6);
  double worst = 0;
  for (double v : dino_bbox_per_frame(copy.clip, traj, object_reference(asset), emb))
    worst = std::max(worst, std::abs(v - 1.0));
  o.require(worst <= 1e-6, "dino = 1");
  o.detail << "max |dino-1| " << worst;
}

// 10. Bundled case end to end with toy-linear under a minute, finite, right shape,
//     bit-identical on a second run.
void end_to_end(Outcome& o) {
  testenv::TempDir dir("acceptance");
  RunConfig cfg = load_run_config(testenv::source_dir() / "data" / "configs" / "synthetic.json");
  o.require(cfg.backend.id == "toy-linear", "bundled config uses toy-linear");
  cfg.output_dir = dir / "a";
  const auto t0 = Clock::now();
  const RunManifest first = run_case(cfg);
  const double dt = seconds_since(t0);
  cfg.output_dir = dir / "b";
  const RunManifest second = run_case(cfg);
  o.require(first.status == "ok" && second.status == "ok", "status");
  const Clip aligned = load_clip_dir(dir / "a" / "align");
  const Clip background = load_clip_dir(testenv::bundled_case() / "background");
  o.require(aligned.size() == background.size() && aligned.frame_size() == background.frame_size(), "shape");
  o.require(all_finite(aligned), "finite");
  o.require(first.output_hashes == second.output_hashes && !first.output_hashes.empty(), "bit-identical rerun");
  o.require(dt < 60.0, "time budget");
  o.detail << aligned.size() << " frames in " << dt << " s";
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"mask algebra", mask_algebra},
      {"compositor background", compositor_background},
      {"pixel noise", pixel_noise},
      {"ddim round trip", ddim_round_trip},
      {"forward-noise moments", forward_moments},
      {"latent-noise locality", latent_noise_locality},
      {"feature injection", injection},
      {"adv-viclip", adv_viclip_properties},
      {"dino-bbox of the copy", dino_copy},
      {"end to end", end_to_end},
  };
  int failed = 0;
  int index = 1;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::printf("criterion %d (%s): %s  %s\n", index++, name, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    failed += !o.pass;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
