// dreaminsert: command-line front end for the insertion pipeline.
//
// Exit codes: 0 ok, 2 validation error, 3 stage failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dreaminsert/backend_registry.hpp"
#include "dreaminsert/compositor.hpp"
#include "dreaminsert/config.hpp"
#include "dreaminsert/dataset.hpp"
#include "dreaminsert/embedder.hpp"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/image_io.hpp"
#include "dreaminsert/latent.hpp"
#include "dreaminsert/metrics.hpp"
#include "dreaminsert/pipeline.hpp"
#include "dreaminsert/pixel_noise.hpp"
#include "dreaminsert/stage1_latent.hpp"
#include "dreaminsert/stage2_align.hpp"
#include "dreaminsert/trajectory_io.hpp"

namespace di = dreaminsert;
namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

std::vector<int> parse_ints(const std::string& text, std::size_t n, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw di::ValidationError(std::string(what) + ": '" + text + "' is not a comma-separated integer list");
    }
  }
  if (out.size() != n) throw di::ValidationError(std::string(what) + ": expected " + std::to_string(n) + " integers");
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw di::ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw di::ValidationError(path.string() + ": " + e.what());
  }
}

struct BackendFlags {
  std::string id;
  fs::path config;
  std::optional<std::uint64_t> seed;
  fs::path registry;

  void add(CLI::App* app) {
    app->add_option("--backend", id, "toy-zero | toy-const | toy-linear | toy-replay | external:<id>");
    app->add_option("--backend-config", config, "Backend JSON (id, codec, schedule, toy parameters, options)");
    app->add_option("--backend-seed", seed, "Seed of the toy predictor parameters");
    app->add_option("--plugin-registry", registry, "Registry JSON for external adapters");
  }

  void apply(di::BackendConfig& cfg) const {
    if (!config.empty()) cfg = di::backend_config_from_json(read_json(config));
    if (!id.empty()) cfg.id = id;
    if (seed) cfg.linear.seed = *seed;
    if (!registry.empty()) cfg.plugin_registry = registry;
  }
};

struct InjectionFlags {
  std::optional<int> feature, spatial, temporal, total;
  std::optional<double> blend;

  void add(CLI::App* app, bool steps_alias = false) {
    app->add_option("--feature-steps,--inject-feature", feature, "Leading steps with spatial feature injection");
    app->add_option("--spatial-attn-steps,--inject-sattn", spatial, "Leading steps with spatial attention injection");
    app->add_option("--temporal-attn-steps,--inject-tattn", temporal, "Leading steps with temporal attention injection");
    app->add_option(steps_alias ? "--total-steps,--steps" : "--total-steps", total, "Stage-2 inference steps");
    app->add_option("--blend", blend, "1 replaces recorded activations, below 1 blends");
  }

  void apply(di::InjectionSchedule& s) const {
    if (feature) s.feature_steps = *feature;
    if (spatial) s.spatial_attn_steps = *spatial;
    if (temporal) s.temporal_attn_steps = *temporal;
    if (total) s.total_steps = *total;
    if (blend) s.blend = *blend;
  }
};

/// Shared by run and ablate: a config file and/or a case dir plus overrides.
struct RunFlags {
  fs::path config;
  fs::path case_dir;
  fs::path out;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma1, sigma2;
  std::optional<int> ln_steps, invert_steps;
  bool invert_conditioned = false;
  std::optional<std::string> prompt_object, prompt_align;
  std::optional<std::string> embedder;
  std::optional<std::uint64_t> embedder_seed;
  std::optional<double> logit_scale;
  fs::path library;
  bool dump_latents = false;
  BackendFlags backend;
  InjectionFlags injection;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Run config JSON")->check(CLI::ExistingFile);
    app->add_option("--case", case_dir, "Case directory in the canonical layout");
    app->add_option("--out", out, "Output directory (default $DREAMINSERT_OUTPUT_ROOT/<case>)");
    app->add_option("--mode", mode, "Stage 1: pn (pixel noise) or ln (latent noise)");
    app->add_option("--seed", seed, "Noise seed");
    app->add_option("--sigma1", sigma1, "PN: interaction-area noise weight");
    app->add_option("--sigma2", sigma2, "PN: object-area noise weight");
    app->add_option("--ln-steps", ln_steps, "LN: inference steps");
    app->add_option("--invert-steps", invert_steps, "LN: inversion depth in steps (-1 = full)");
    app->add_flag("--invert-conditioned", invert_conditioned, "LN: invert with the object prompt");
    app->add_option("--prompt-object", prompt_object, "Stage-1 prompt (default prompts.json object)");
    app->add_option("--prompt-align", prompt_align, "Stage-2 prompt (default prompts.json align)");
    app->add_option("--embedder", embedder, "toy | external:<id>");
    app->add_option("--embedder-seed", embedder_seed, "Toy embedder seed");
    app->add_option("--logit-scale", logit_scale, "Adv-ViClip softmax scale");
    app->add_option("--library", library, "Prompt library JSON (enables adv_viclip)");
    app->add_flag("--dump-latents", dump_latents, "Write float32 latent dumps under latents/");
    backend.add(app);
    injection.add(app);
  }

  di::RunConfig resolve() const {
    di::RunConfig cfg = config.empty() ? di::RunConfig{} : di::load_run_config(config);
    if (!case_dir.empty()) cfg.paths = di::CasePaths::from_case_dir(case_dir);
    if (cfg.paths.trajectory.empty()) throw di::ValidationError("give --config or --case");
    if (!out.empty()) cfg.output_dir = out;
    if (mode) cfg.mode = di::mode_from_name(*mode);
    if (seed) cfg.seed = *seed;
    cfg.noise.seed = cfg.ln.seed = cfg.seed;
    if (sigma1) cfg.noise.sigma1 = *sigma1;
    if (sigma2) cfg.noise.sigma2 = *sigma2;
    if (ln_steps) cfg.ln.steps = *ln_steps;
    if (invert_steps) cfg.ln.invert_steps = *invert_steps;
    if (invert_conditioned) cfg.ln.invert_conditioned = true;
    if (prompt_object) cfg.stage1_prompt = *prompt_object;
    if (prompt_align) cfg.stage2_prompt = *prompt_align;
    if (embedder) cfg.embedder = *embedder;
    if (embedder_seed) cfg.embedder_seed = *embedder_seed;
    if (logit_scale) cfg.logit_scale = *logit_scale;
    if (!library.empty()) cfg.prompt_library = library;
    if (dump_latents) cfg.dump_latents = true;
    backend.apply(cfg.backend);
    injection.apply(cfg.injection);
    return cfg;
  }
};

void print_manifest_summary(const di::RunManifest& m, const fs::path& out) {
  std::cout << "case " << m.case_id << ": " << m.status << " in " << m.wall_clock_s << " s\n";
  std::cout << "manifest " << (out / "manifest.json").string() << '\n';
  if (m.metrics.is_object()) {
    std::cout << "clip_i " << m.metrics.at("clip_i") << "  clip_t " << m.metrics.at("clip_t") << "  dino "
              << m.metrics.at("dino") << "  adv_viclip " << m.metrics.at("adv_viclip") << '\n';
  }
}

// --- subcommands -----------------------------------------------------------

struct TrajgenCmd {
  fs::path spec, out, masks;
  std::string init;
  std::vector<std::string> deltas;
  int frames = 16, width = 64, height = 64;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("trajgen", "Generate a bounding-box trajectory");
    c->add_option("--spec", spec, "Trajectory spec JSON (init/deltas or explicit boxes)");
    c->add_option("--init", init, "Initial box x0,y0,w,h");
    c->add_option("--delta", deltas, "Per-frame change dx,dy,dw,dh; repeat for a schedule");
    c->add_option("--frames", frames, "Number of frames");
    c->add_option("--width", width, "Frame width");
    c->add_option("--height", height, "Frame height");
    c->add_option("--out", out, "Output trajectory JSON")->required();
    c->add_option("--masks", masks, "Also write trajectory_####.png masks here");
  }

  int run() const {
    di::TrajectorySequence traj;
    if (!spec.empty()) {
      traj = di::trajectory_from_json(read_json(spec));
    } else {
      if (init.empty()) throw di::ValidationError("trajgen: give --spec or --init");
      const auto b = parse_ints(init, 4, "--init");
      std::vector<di::BoxDelta> ds;
      for (const auto& d : deltas) {
        const auto v = parse_ints(d, 4, "--delta");
        ds.push_back({v[0], v[1], v[2], v[3]});
      }
      traj = di::generate_trajectory({b[0], b[1], b[2], b[3]}, ds, frames, {width, height});
    }
    di::save_trajectory(out, traj);
    if (!masks.empty()) {
      const auto rasters = di::rasterize(traj);
      for (std::size_t i = 0; i < rasters.size(); ++i) {
        di::save_mask_png(masks / di::frame_filename(i, "trajectory_"), rasters[i]);
      }
    }
    std::cout << "wrote " << traj.size() << " boxes to " << out.string() << '\n';
    return 0;
  }
};

struct ComposeCmd {
  fs::path case_dir, out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("compose", "Paste the object along the trajectory (copy sequence + masks)");
    c->add_option("--case", case_dir, "Case directory")->required();
    c->add_option("--out", out, "Output directory; receives copy/ and masks/");
  }

  int run() const {
    const auto inputs = di::load_case(di::CasePaths::from_case_dir(case_dir));
    di::RunConfig tmp;
    tmp.output_dir = out;
    const fs::path dir = di::resolve_output_dir(tmp, inputs.case_id);
    di::CopySequence copy;
    try {
      copy = di::make_copy_sequence(inputs.asset, inputs.background, inputs.traj);
    } catch (const std::exception& e) {
      throw di::StageError("compositor", e.what());
    }
    di::save_clip_dir(dir / "copy", di::quantize_8bit(copy.clip));
    di::save_partitions(dir / "masks", copy.partitions);
    std::cout << "wrote " << (dir / "copy").string() << " and " << (dir / "masks").string() << '\n';
    return 0;
  }
};

struct Stage1Cmd {
  fs::path copy_dir, masks_dir, out, dump;
  std::string mode = "ln";
  std::string prompt;
  di::NoiseConfig noise;
  di::LnInjOptions ln;
  BackendFlags backend;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("stage1", "Motion creation: pixel (pn) or latent (ln) noise injection");
    c->add_option("--copy", copy_dir, "Copy-sequence frame directory")->required();
    c->add_option("--masks", masks_dir, "Directory with merged_/trajectory_ masks")->required();
    c->add_option("--out", out, "Coarse-clip output directory")->required();
    c->add_option("--mode", mode, "pn | ln");
    c->add_option("--prompt", prompt, "LN: object prompt");
    c->add_option("--sigma1", noise.sigma1, "PN: interaction-area weight");
    c->add_option("--sigma2", noise.sigma2, "PN: object-area weight");
    c->add_option("--seed", noise.seed, "Noise seed");
    c->add_option("--steps", ln.steps, "LN: inference steps");
    c->add_option("--invert-steps", ln.invert_steps, "LN: inversion depth (-1 = full)");
    c->add_flag("--invert-conditioned", ln.invert_conditioned, "LN: invert with the prompt");
    c->add_flag("--strict", ln.strict, "LN: fail on frames with an empty interaction area");
    c->add_option("--dump-latents", dump, "LN: write inverted/injected latents to this directory");
    backend.add(c);
  }

  int run() {
    const di::Clip copy = di::load_clip_dir(copy_dir);
    const auto parts = di::load_partitions(masks_dir);
    if (parts.size() != copy.size()) throw di::ValidationError("stage1: mask count differs from frame count");
    di::Clip coarse;
    if (di::mode_from_name(mode) == di::Stage1Mode::pn) {
      for (const auto& w : noise.validate()) std::cerr << "warning: " << w << '\n';
      try {
        coarse = di::inject_pixel_noise(copy, parts, noise);
      } catch (const std::exception& e) {
        throw di::StageError("pixel_noise", e.what());
      }
    } else {
      if (prompt.empty()) throw di::ValidationError("stage1 --mode ln needs --prompt");
      di::BackendConfig bc;
      backend.apply(bc);
      auto be = di::make_backend(bc);
      ln.seed = noise.seed;
      try {
        auto r = di::run_ln_inj(copy, parts, di::Condition{prompt, std::nullopt}, *be, ln);
        coarse = std::move(r.coarse);
        if (!dump.empty()) {
          di::write_latent_dump(dump / "z_inverted", r.inverted, be->schedule().hash());
          di::write_latent_dump(dump / "z_injected", r.injected, be->schedule().hash());
        }
      } catch (const di::ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        throw di::StageError("stage1_latent", e.what());
      }
    }
    di::save_clip_dir(out, coarse);
    std::cout << "wrote " << coarse.size() << " frames to " << out.string() << '\n';
    return 0;
  }
};

struct Stage2Cmd {
  fs::path copy_dir, coarse_dir, out, dump;
  std::string prompt;
  BackendFlags backend;
  InjectionFlags injection;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("stage2", "Motion alignment: video inversion + injected conditioned decoding");
    c->add_option("--copy", copy_dir, "Copy-sequence frames (first frame conditions decoding)")->required();
    c->add_option("--coarse", coarse_dir, "Coarse-clip frames")->required();
    c->add_option("--prompt", prompt, "Alignment prompt")->required();
    c->add_option("--out", out, "Aligned-clip output directory")->required();
    c->add_option("--dump-latents", dump, "Write the inverted latent zeta to this directory");
    backend.add(c);
    injection.add(c, true);
  }

  int run() {
    const di::Clip copy = di::load_clip_dir(copy_dir);
    const di::Clip coarse = di::load_clip_dir(coarse_dir);
    di::BackendConfig bc;
    backend.apply(bc);
    auto be = di::make_backend(bc);
    di::InjectionSchedule sched;
    injection.apply(sched);
    sched.validate();
    for (di::Site s : sched.active_sites()) {
      if (!be->has_site(s)) {
        throw di::ValidationError("backend '" + be->id() + "' does not expose site " + std::string(di::site_name(s)));
      }
    }
    di::DInvResult r;
    try {
      r = di::run_d_inv(copy, coarse, prompt, *be, sched);
    } catch (const di::ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw di::StageError("stage2_align", e.what());
    }
    di::save_clip_dir(out, r.aligned);
    if (!dump.empty()) di::write_latent_dump(dump / "zeta", r.zeta, be->schedule().hash());
    std::cout << "wrote " << r.aligned.size() << " frames to " << out.string() << '\n';
    return 0;
  }
};

struct EvalCmd {
  fs::path pred, case_dir, reference, library, out;
  std::string case_id, prompt, embedder = "toy";
  std::uint64_t embedder_seed = 0;
  double logit_scale = 100.0;
  fs::path registry;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "Score a predicted clip (Clip-I, Clip-T, DINO-bbox, Adv-ViClip)");
    c->add_option("--pred", pred, "Predicted frame directory")->required();
    c->add_option("--case-dir", case_dir, "Case directory (object, trajectory, prompts)")->required();
    c->add_option("--case", case_id, "Case id in the prompt library (default: prompts.json case_id)");
    c->add_option("--reference", reference, "Reference frames (default: the case's copy sequence)");
    c->add_option("--library", library, "Prompt library JSON");
    c->add_option("--prompt", prompt, "Clip-T prompt (default: prompts.json align)");
    c->add_option("--embedder", embedder, "toy | external:<id>");
    c->add_option("--embedder-seed", embedder_seed, "Toy embedder seed");
    c->add_option("--logit-scale", logit_scale, "Adv-ViClip softmax scale");
    c->add_option("--plugin-registry", registry, "Registry JSON for external adapters");
    c->add_option("--out", out, "Report JSON (default: stdout)");
  }

  int run() const {
    const auto inputs = di::load_case(di::CasePaths::from_case_dir(case_dir));
    const di::Clip p = di::load_clip_dir(pred);
    const di::Clip ref = reference.empty()
                             ? di::quantize_8bit(di::make_copy_sequence(inputs.asset, inputs.background, inputs.traj).clip)
                             : di::load_clip_dir(reference);
    std::optional<di::PromptLibrary> lib;
    if (!library.empty()) lib = di::PromptLibrary::load(library);
    const auto emb = di::make_embedder(embedder, embedder_seed, registry);
    const di::Frame object = di::object_reference(inputs.asset);

    di::EvaluationInputs in;
    in.pred = &p;
    in.reference = &ref;
    in.prompt = prompt.empty() ? inputs.prompts.align : prompt;
    in.traj = &inputs.traj;
    in.object_image = &object;
    in.case_id = case_id.empty() ? inputs.case_id : case_id;
    in.library = lib ? &*lib : nullptr;
    in.logit_scale = logit_scale;
    const auto report = di::evaluate_case(in, *emb);
    if (out.empty()) {
      std::cout << report.to_json().dump(2) << '\n';
    } else {
      di::write_report(out, report);
      std::cout << "wrote " << out.string() << '\n';
    }
    return 0;
  }
};

struct RunCmd {
  RunFlags flags;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("run", "Full pipeline on one case; writes outputs and manifest.json");
    flags.add(c);
  }

  int run() const {
    const auto cfg = flags.resolve();
    const auto m = di::run_case(cfg);
    print_manifest_summary(m, di::resolve_output_dir(cfg, m.case_id));
    return 0;
  }
};

struct AblateCmd {
  RunFlags flags;
  fs::path sweep_file;
  std::vector<std::string> grid;
  bool listed = false;
  int jobs = 1;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ablate", "Parameter sweep over sigma / injection counts; writes summary.tsv");
    flags.add(c);
    c->add_option("--sweep", sweep_file, "Sweep JSON {mode, axes:[{parameter, values}]}");
    c->add_option("--grid", grid, "Axis as name=v1,v2,...; repeatable");
    c->add_flag("--listed", listed, "Zip axes instead of taking their product");
    c->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  }

  int run() const {
    auto cfg = flags.resolve();
    if (cfg.output_dir.empty()) cfg.output_dir = di::output_root() / "ablation";
    di::Sweep sweep = sweep_file.empty() ? di::Sweep{} : di::Sweep::from_json(read_json(sweep_file));
    for (const auto& g : grid) {
      const auto eq = g.find('=');
      if (eq == std::string::npos) throw di::ValidationError("--grid expects name=v1,v2,...");
      di::SweepAxis axis{g.substr(0, eq), {}};
      std::stringstream ss(g.substr(eq + 1));
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          axis.values.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw di::ValidationError("--grid: bad value '" + item + "'");
        }
      }
      sweep.axes.push_back(std::move(axis));
    }
    if (listed) sweep.listed = true;
    const auto result = di::ablate(cfg, sweep, jobs);
    std::size_t failed = 0;
    for (const auto& m : result.manifests) failed += m.status != "ok";
    std::cout << result.manifests.size() << " runs, " << failed << " failed; summary " << result.summary.string()
              << '\n';
    return failed ? kExitStage : 0;
  }
};

struct MakeCaseCmd {
  fs::path out, background, object, object_mask, trajectory;
  bool synthetic = false;
  std::uint64_t seed = 0;
  int frames = 16, size = 64;
  std::string case_id, object_prompt, align_prompt, fake_prompt;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("make-case", "Write a case directory in the canonical layout");
    c->add_option("--out", out, "Case directory")->required();
    c->add_flag("--synthetic", synthetic, "Generate the bundled synthetic case");
    c->add_option("--seed", seed, "Synthetic: seed");
    c->add_option("--frames", frames, "Synthetic: frame count");
    c->add_option("--size", size, "Synthetic: square frame size");
    c->add_option("--background", background, "Background frame directory");
    c->add_option("--object", object, "Object PNG");
    c->add_option("--object-mask", object_mask, "Object mask PNG");
    c->add_option("--trajectory", trajectory, "Trajectory spec JSON");
    c->add_option("--case-id", case_id, "Case id");
    c->add_option("--object-prompt", object_prompt, "Stage-1 prompt");
    c->add_option("--align-prompt", align_prompt, "Stage-2 prompt (default: object prompt)");
    c->add_option("--fake-prompt", fake_prompt, "Adversarial prompt for Adv-ViClip");
  }

  int run() const {
    di::CaseInputs c;
    if (synthetic) {
      c = di::make_synthetic_case(seed, frames, size);
    } else {
      if (background.empty() || object.empty() || object_mask.empty() || trajectory.empty()) {
        throw di::ValidationError("make-case: give --synthetic or --background, --object, --object-mask, --trajectory");
      }
      if (case_id.empty() || object_prompt.empty() || fake_prompt.empty()) {
        throw di::ValidationError("make-case: --case-id, --object-prompt and --fake-prompt are required");
      }
      c.case_id = case_id;
      c.background = di::load_clip_dir(background);
      c.asset = {di::load_png(object), di::load_mask_png(object_mask)};
      c.traj = di::trajectory_from_json(read_json(trajectory));
      const std::string align = align_prompt.empty() ? object_prompt : align_prompt;
      c.prompts = {case_id, object_prompt, align, align, fake_prompt};
    }
    di::make_dataset_case(out, c);
    std::cout << "wrote case " << c.case_id << " to " << out.string() << '\n';
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dreaminsert: training-free image-to-video object insertion"};
  app.set_version_flag("--version", di::version());
  app.require_subcommand(1);

  TrajgenCmd trajgen;
  ComposeCmd compose;
  Stage1Cmd stage1;
  Stage2Cmd stage2;
  EvalCmd eval;
  RunCmd run;
  AblateCmd ablate;
  MakeCaseCmd make_case;
  trajgen.add(app);
  compose.add(app);
  stage1.add(app);
  stage2.add(app);
  eval.add(app);
  run.add(app);
  ablate.add(app);
  make_case.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (app.got_subcommand("trajgen")) return trajgen.run();
    if (app.got_subcommand("compose")) return compose.run();
    if (app.got_subcommand("stage1")) return stage1.run();
    if (app.got_subcommand("stage2")) return stage2.run();
    if (app.got_subcommand("eval")) return eval.run();
    if (app.got_subcommand("run")) return run.run();
    if (app.got_subcommand("ablate")) return ablate.run();
    if (app.got_subcommand("make-case")) return make_case.run();
  } catch (const di::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const di::StageError& e) {
    std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
