#include "dreaminsert/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "dreaminsert/backend_registry.hpp"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/hash.hpp"
#include "dreaminsert/image_io.hpp"
#include "dreaminsert/pixel_noise.hpp"
#include "dreaminsert/stage1_latent.hpp"
#include "dreaminsert/stage2_align.hpp"

#ifndef DREAMINSERT_VERSION
#define DREAMINSERT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace dreaminsert {

const char* version() noexcept { return DREAMINSERT_VERSION; }

namespace {

template <typename Fn>
void run_stage(const char* name, PipelineResult& r, const StageCallback& on_stage, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  if (on_stage) on_stage(name, r);
}

void precheck(const CaseInputs& inputs, const RunConfig& cfg, const DiffusionBackend& backend) {
  cfg.validate(false);
  validate_case(inputs);
  for (Site s : cfg.injection.active_sites()) {
    if (!backend.has_site(s)) {
      throw ValidationError("backend '" + backend.id() + "' does not expose site " + std::string(site_name(s)) +
                            "; set its injection count to 0");
    }
  }
  (void)backend.codec().latent_shape(inputs.background.frame_size());
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

PipelineResult run_pipeline(const CaseInputs& inputs, const RunConfig& cfg, DiffusionBackend& backend,
                            const Embedder& embedder, const PromptLibrary* library, const StageCallback& on_stage) {
  precheck(inputs, cfg, backend);
  const std::string prompt_obj = cfg.stage1_prompt.empty() ? inputs.prompts.object : cfg.stage1_prompt;
  const std::string prompt_align = cfg.stage2_prompt.empty() ? inputs.prompts.align : cfg.stage2_prompt;

  PipelineResult r;
  r.case_id = inputs.case_id;
  std::vector<RegionPartition> partitions;

  run_stage("geometry", r, on_stage, [&] {
    validate_trajectory(inputs.traj);
    partitions.reserve(inputs.traj.size());
    for (const BBox& box : inputs.traj.boxes) {
      const BinaryMask traj = rasterize(box, inputs.traj.frame);
      partitions.push_back(partition(merge_mask(inputs.asset.mask, box, inputs.traj.frame), traj));
    }
    std::size_t ia = 0;
    for (const auto& p : partitions) ia += p.interaction.count();
    r.stages["geometry"] = {{"frames", partitions.size()}, {"interaction_pixels", ia}};
  });

  run_stage("compositor", r, on_stage, [&] {
    r.copy = make_copy_sequence(inputs.asset, inputs.background, inputs.traj);
    for (std::size_t n = 0; n < partitions.size(); ++n) {
      if (!(r.copy.partitions[n].object == partitions[n].object)) {
        throw StageError("compositor", "merged mask disagrees with geometry at frame " + std::to_string(n));
      }
    }
    r.copy.clip = quantize_8bit(r.copy.clip);
    r.copy.clip.fps = inputs.background.fps;
    r.z_copy = encode_clip(backend.codec(), r.copy.clip);
    r.stages["compositor"] = {{"frames", r.copy.clip.size()}};
  });

  if (cfg.mode == Stage1Mode::pn) {
    run_stage("pixel_noise", r, on_stage, [&] {
      for (auto& w : cfg.noise.validate()) r.warnings.push_back(std::move(w));
      r.coarse = quantize_8bit(inject_pixel_noise(r.copy.clip, r.copy.partitions, cfg.noise));
      r.stages["pixel_noise"] = {{"sigma1", cfg.noise.sigma1}, {"sigma2", cfg.noise.sigma2}, {"seed", cfg.noise.seed}};
    });
  } else {
    run_stage("stage1_latent", r, on_stage, [&] {
      const Condition cond_obj{prompt_obj, std::nullopt};
      r.ln = run_ln_inj(r.copy.clip, r.copy.partitions, cond_obj, backend, cfg.ln);
      r.coarse = quantize_8bit(r.ln->coarse);
      r.stages["stage1_latent"] = {{"steps", cfg.ln.steps},
                                   {"invert_steps", cfg.ln.invert_steps},
                                   {"grid_levels", r.ln->grid.size()},
                                   {"seed", cfg.ln.seed},
                                   {"prompt", prompt_obj}};
    });
  }
  r.coarse.fps = inputs.background.fps;

  run_stage("stage2_align", r, on_stage, [&] {
    DInvResult d = run_d_inv(r.copy.clip, r.coarse, prompt_align, backend, cfg.injection);
    r.aligned = quantize_8bit(d.aligned);
    r.aligned.fps = inputs.background.fps;
    r.zeta = std::move(d.zeta);
    r.stages["stage2_align"] = std::move(d.manifest);
  });

  run_stage("metrics", r, on_stage, [&] {
    const Frame reference = object_reference(inputs.asset);
    EvaluationInputs in;
    in.pred = &r.aligned;
    in.reference = &r.copy.clip;
    in.prompt = prompt_align;
    in.traj = &inputs.traj;
    in.object_image = &reference;
    in.case_id = inputs.case_id;
    in.library = library && library->find(inputs.case_id) ? library : nullptr;
    in.logit_scale = cfg.logit_scale;
    r.report = evaluate_case(in, embedder);
    r.report.config["mode"] = std::string(mode_name(cfg.mode));
    r.report.config["backend"] = backend.id();
  });

  const auto failures = check_invariants(inputs, r);
  if (!failures.empty()) {
    std::string msg;
    for (const auto& f : failures) msg += (msg.empty() ? "" : "; ") + f;
    throw StageError("invariants", msg);
  }
  return r;
}

std::vector<std::string> check_invariants(const CaseInputs& inputs, const PipelineResult& r) {
  std::vector<std::string> out;
  const std::size_t n = inputs.background.size();
  const FrameSize size = inputs.background.frame_size();
  const std::pair<const char*, const Clip*> clips[] = {{"copy", &r.copy.clip}, {"coarse", &r.coarse}, {"align", &r.aligned}};
  for (const auto& [name, clip] : clips) {
    if (clip->size() != n || (n > 0 && clip->frame_size() != size)) {
      out.push_back(std::string(name) + " clip has the wrong length or frame size");
    } else if (!all_finite(*clip)) {
      out.push_back(std::string(name) + " clip has non-finite values");
    }
  }
  if (r.copy.partitions.size() != n) {
    out.push_back("partition count differs from frame count");
    return out;
  }
  for (std::size_t i = 0; i < n && i < r.copy.clip.size(); ++i) {
    const auto& p = r.copy.partitions[i];
    const auto bg = p.background.bits(), ia = p.interaction.bits(), obj = p.object.bits();
    for (std::size_t k = 0; k < bg.size(); ++k) {
      if (bg[k] + ia[k] + obj[k] != 1) {
        out.push_back("region masks do not partition frame " + std::to_string(i));
        break;
      }
    }
    const Frame& copy = r.copy.clip.frames[i];
    const Frame back = quantize_8bit(inputs.background.frames[i]);
    bool preserved = true;
    for (int y = 0; y < size.height && preserved; ++y)
      for (int x = 0; x < size.width && preserved; ++x)
        if (!p.object.at(x, y))
          for (int c = 0; c < Frame::kChannels; ++c)
            if (copy.at(x, y, c) != back.at(x, y, c)) preserved = false;
    if (!preserved) out.push_back("compositor changed background pixels in frame " + std::to_string(i));
  }
  return out;
}

nlohmann::json RunManifest::to_json() const {
  return {{"schema_version", kSchemaVersion},
          {"case_id", case_id},
          {"status", status},
          {"failed_stage", failed_stage},
          {"error", error},
          {"config_hash", config_hash},
          {"config", config},
          {"input_hashes", input_hashes},
          {"seeds", seeds},
          {"tool_version", tool_version},
          {"started_at", started_at},
          {"wall_clock_s", wall_clock_s},
          {"outputs", outputs},
          {"output_hashes", output_hashes},
          {"metrics", metrics},
          {"warnings", warnings}};
}

void write_json_atomic(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

void save_clip(const fs::path& dir, const Clip& clip, std::vector<fs::path>& written) {
  save_clip_dir(dir, clip);
  for (std::size_t i = 0; i < clip.size(); ++i) written.push_back(dir / frame_filename(i));
}

void dump(const fs::path& stem, const LatentClip& z, const std::string& schedule_hash, std::vector<fs::path>& written) {
  write_latent_dump(stem, z, schedule_hash);
  written.push_back(fs::path(stem) += ".bin");
  written.push_back(fs::path(stem) += ".json");
}

void hash_inputs(const CasePaths& paths, const fs::path& library, RunManifest& m) {
  for (std::size_t i = 0;; ++i) {
    const fs::path p = paths.background_dir / frame_filename(i);
    if (!fs::is_regular_file(p)) break;
    m.input_hashes["background/" + frame_filename(i)] = sha256_file(p);
  }
  m.input_hashes["object_image"] = sha256_file(paths.object_image);
  m.input_hashes["object_mask"] = sha256_file(paths.object_mask);
  m.input_hashes["trajectory"] = sha256_file(paths.trajectory);
  m.input_hashes["prompts"] = sha256_file(paths.prompts);
  if (!library.empty()) m.input_hashes["prompt_library"] = sha256_file(library);
}

void run_case_into(const RunConfig& cfg, RunManifest& m) {
  const auto t0 = std::chrono::steady_clock::now();
  m.started_at = utc_now();
  m.tool_version = version();
  m.config = to_json(cfg);
  m.config_hash = config_hash(cfg);
  m.seeds = {{"run", cfg.seed}, {"backend", cfg.backend.linear.seed}, {"embedder", cfg.embedder_seed}};

  cfg.validate(true);
  CaseInputs inputs = load_case(cfg.paths);
  if (!cfg.case_id.empty()) inputs.case_id = cfg.case_id;
  m.case_id = inputs.case_id;
  std::optional<PromptLibrary> library;
  if (!cfg.prompt_library.empty()) library = PromptLibrary::load(cfg.prompt_library);
  auto backend = make_backend(cfg.backend);
  auto embedder = make_embedder(cfg.embedder, cfg.embedder_seed, cfg.backend.plugin_registry);
  hash_inputs(cfg.paths, cfg.prompt_library, m);

  const fs::path out = resolve_output_dir(cfg, inputs.case_id);
  for (const char* sub : {"copy", "masks", "coarse", "align", "latents"}) fs::remove_all(out / sub);
  for (const char* file : {"report.json", "manifest.json"}) fs::remove(out / file);
  fs::create_directories(out);

  std::vector<fs::path> written;
  const std::string sched = backend->schedule().hash();
  const auto persist = [&](std::string_view stage, const PipelineResult& r) {
    if (stage == "compositor") {
      save_clip(out / "copy", r.copy.clip, written);
      for (auto& p : save_partitions(out / "masks", r.copy.partitions)) written.push_back(std::move(p));
      m.outputs["copy"] = (out / "copy").string();
      m.outputs["masks"] = (out / "masks").string();
      if (cfg.dump_latents) dump(out / "latents" / "z_copy", r.z_copy, sched, written);
    } else if (stage == "pixel_noise" || stage == "stage1_latent") {
      save_clip(out / "coarse", r.coarse, written);
      m.outputs["coarse"] = (out / "coarse").string();
      if (cfg.dump_latents && r.ln) {
        dump(out / "latents" / "z_inverted", r.ln->inverted, sched, written);
        dump(out / "latents" / "z_injected", r.ln->injected, sched, written);
      }
    } else if (stage == "stage2_align") {
      save_clip(out / "align", r.aligned, written);
      m.outputs["align"] = (out / "align").string();
      if (cfg.dump_latents) dump(out / "latents" / "zeta", r.zeta, sched, written);
    } else if (stage == "metrics") {
      write_report(out / "report.json", r.report);
      written.push_back(out / "report.json");
      m.outputs["report"] = (out / "report.json").string();
    }
    if (cfg.dump_latents) m.outputs["latents"] = (out / "latents").string();
  };

  const auto finish = [&] {
    for (const auto& p : written) m.output_hashes[fs::relative(p, out).generic_string()] = sha256_file(p);
    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json_atomic(out / "manifest.json", m.to_json());
  };

  try {
    const PipelineResult r = run_pipeline(inputs, cfg, *backend, *embedder, library ? &*library : nullptr, persist);
    m.metrics = r.report.to_json();
    m.warnings = r.warnings;
  } catch (const StageError& e) {
    m.status = "failed";
    m.failed_stage = e.stage();
    m.error = e.what();
    finish();
    throw;
  }
  finish();
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

int as_int(const std::string& name, double v) {
  if (!is_integral(v)) throw ValidationError("sweep parameter " + name + " needs integer values");
  return static_cast<int>(v);
}

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

RunManifest run_case(const RunConfig& cfg) {
  RunManifest m;
  run_case_into(cfg, m);
  return m;
}

Sweep Sweep::from_json(const nlohmann::json& j) {
  Sweep s;
  try {
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode != "cartesian" && mode != "listed") throw ValidationError("sweep mode must be cartesian or listed");
      s.listed = mode == "listed";
    }
    for (const auto& axis : j.at("axes")) {
      s.axes.push_back({axis.at("parameter").get<std::string>(), axis.at("values").get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("sweep: ") + e.what());
  }
  return s;
}

void apply_parameter(RunConfig& cfg, const std::string& p, double v) {
  if (p == "sigma1") {
    cfg.noise.sigma1 = v;
  } else if (p == "sigma2") {
    cfg.noise.sigma2 = v;
  } else if (p == "feature_steps") {
    cfg.injection.feature_steps = as_int(p, v);
  } else if (p == "spatial_attn_steps") {
    cfg.injection.spatial_attn_steps = as_int(p, v);
  } else if (p == "temporal_attn_steps") {
    cfg.injection.temporal_attn_steps = as_int(p, v);
  } else if (p == "total_steps") {
    cfg.injection.total_steps = as_int(p, v);
  } else if (p == "blend") {
    cfg.injection.blend = v;
  } else if (p == "ln_steps") {
    cfg.ln.steps = as_int(p, v);
  } else if (p == "seed") {
    if (!is_integral(v) || v < 0) throw ValidationError("sweep parameter seed needs non-negative integers");
    cfg.seed = cfg.noise.seed = cfg.ln.seed = static_cast<std::uint64_t>(v);
  } else {
    throw ValidationError("unknown sweep parameter '" + p + "'");
  }
}

double parameter_value(const RunConfig& cfg, const std::string& p) {
  if (p == "sigma1") return cfg.noise.sigma1;
  if (p == "sigma2") return cfg.noise.sigma2;
  if (p == "feature_steps") return cfg.injection.feature_steps;
  if (p == "spatial_attn_steps") return cfg.injection.spatial_attn_steps;
  if (p == "temporal_attn_steps") return cfg.injection.temporal_attn_steps;
  if (p == "total_steps") return cfg.injection.total_steps;
  if (p == "blend") return cfg.injection.blend;
  if (p == "ln_steps") return cfg.ln.steps;
  if (p == "seed") return static_cast<double>(cfg.seed);
  throw ValidationError("unknown sweep parameter '" + p + "'");
}

std::vector<RunConfig> expand_sweep(const RunConfig& base, const Sweep& sweep) {
  if (sweep.axes.empty()) throw ValidationError("sweep grid is empty");
  for (const auto& a : sweep.axes) {
    if (a.values.empty()) throw ValidationError("sweep axis '" + a.parameter + "' has no values");
  }
  std::vector<std::vector<double>> points;
  if (sweep.listed) {
    const std::size_t len = sweep.axes.front().values.size();
    for (const auto& a : sweep.axes) {
      if (a.values.size() != len) throw ValidationError("listed sweep axes must have equal lengths");
    }
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> pt;
      for (const auto& a : sweep.axes) pt.push_back(a.values[i]);
      points.push_back(std::move(pt));
    }
  } else {
    points.emplace_back();
    for (const auto& a : sweep.axes) {
      std::vector<std::vector<double>> next;
      for (const auto& pt : points) {
        for (double v : a.values) {
          auto q = pt;
          q.push_back(v);
          next.push_back(std::move(q));
        }
      }
      points = std::move(next);
    }
  }
  const fs::path root = base.output_dir.empty() ? output_root() / "ablation" : base.output_dir;
  std::vector<RunConfig> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    RunConfig cfg = base;
    for (std::size_t k = 0; k < sweep.axes.size(); ++k) apply_parameter(cfg, sweep.axes[k].parameter, points[i][k]);
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    cfg.output_dir = root / name;
    cfg.validate(false);
    out.push_back(std::move(cfg));
  }
  return out;
}

AblationResult ablate(const RunConfig& base, const Sweep& sweep, int jobs) {
  if (jobs < 1) throw ValidationError("jobs must be >= 1");
  const auto configs = expand_sweep(base, sweep);
  AblationResult result;
  result.manifests.resize(configs.size());

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      RunManifest& m = result.manifests[i];
      try {
        run_case_into(configs[i], m);
      } catch (const StageError& e) {
        m.status = "failed";
        m.failed_stage = e.stage();
        m.error = e.what();
      } catch (const std::exception& e) {
        m.status = "failed";
        m.failed_stage = "validation";
        m.error = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), configs.size());
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }

  const fs::path root = configs.front().output_dir.parent_path();
  fs::create_directories(root);
  result.summary = root / "summary.tsv";
  std::ofstream tsv(result.summary);
  if (!tsv) throw std::runtime_error("cannot write " + result.summary.string());
  tsv << "run";
  for (const auto& a : sweep.axes) tsv << '\t' << a.parameter;
  tsv << "\tstatus\tclip_i\tclip_t\tdino\tadv_viclip\toutput_dir\n";
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& m = result.manifests[i];
    tsv << configs[i].output_dir.filename().string();
    nlohmann::json params = nlohmann::json::object();
    for (const auto& a : sweep.axes) {
      const double v = parameter_value(configs[i], a.parameter);
      tsv << '\t' << format_value(v);
      params[a.parameter] = v;
    }
    tsv << '\t' << m.status;
    if (m.status == "ok" && m.metrics.is_object()) {
      const auto& adv = m.metrics.at("adv_viclip");
      tsv << '\t' << format_value(m.metrics.at("clip_i").get<double>()) << '\t'
          << format_value(m.metrics.at("clip_t").get<double>()) << '\t'
          << format_value(m.metrics.at("dino").get<double>()) << '\t'
          << (adv.is_null() ? std::string("-") : format_value(adv.get<double>()));
    } else {
      tsv << "\t-\t-\t-\t-";
    }
    tsv << '\t' << configs[i].output_dir.string() << '\n';
    runs.push_back({{"run", configs[i].output_dir.filename().string()}, {"params", params}, {"status", m.status},
                    {"error", m.error}});
  }
  write_json_atomic(root / "sweep.json", {{"mode", sweep.listed ? "listed" : "cartesian"}, {"runs", runs}});
  return result;
}

}  // namespace dreaminsert
