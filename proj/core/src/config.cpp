#include "dreaminsert/config.hpp"

#include <cstdlib>
#include <fstream>

#include "dreaminsert/errors.hpp"
#include "dreaminsert/hash.hpp"

namespace fs = std::filesystem;

namespace dreaminsert {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ValidationError(std::string("config: missing ") + what);
  if (!fs::is_regular_file(p)) throw ValidationError(std::string(what) + " not found: " + p.string());
}

}  // namespace

CasePaths CasePaths::from_case_dir(const fs::path& dir) {
  return {dir / "background", dir / "object.png", dir / "object_mask.png", dir / "trajectory.json",
          dir / "prompts.json"};
}

CasePrompts CasePrompts::from_json(const nlohmann::json& j) {
  CasePrompts p;
  try {
    p.case_id = j.at("case_id").get<std::string>();
    p.object = j.at("object").get<std::string>();
    p.align = j.value("align", p.object);
    p.optimal = j.value("optimal", p.align);
    p.fake = j.at("fake").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("prompts.json: ") + e.what());
  }
  if (p.case_id.empty() || p.object.empty() || p.align.empty() || p.optimal.empty() || p.fake.empty()) {
    throw ValidationError("prompts.json: case_id and prompts must be non-empty");
  }
  return p;
}

CasePrompts CasePrompts::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

nlohmann::json CasePrompts::to_json() const {
  return {{"case_id", case_id}, {"object", object}, {"align", align}, {"optimal", optimal}, {"fake", fake}};
}

std::string_view mode_name(Stage1Mode mode) noexcept { return mode == Stage1Mode::pn ? "pn" : "ln"; }

Stage1Mode mode_from_name(std::string_view name) {
  if (name == "pn") return Stage1Mode::pn;
  if (name == "ln") return Stage1Mode::ln;
  throw ValidationError("unknown stage-1 mode '" + std::string(name) + "' (expected pn or ln)");
}

void RunConfig::validate(bool check_paths) const {
  (void)noise.validate();
  if (ln.steps < 1) throw ValidationError("ln.steps must be >= 1");
  if (ln.invert_steps < -1 || ln.invert_steps > ln.steps) {
    throw ValidationError("ln.invert_steps must be -1 or lie in [0, ln.steps]");
  }
  injection.validate();
  if (!(logit_scale > 0.0)) throw ValidationError("logit_scale must be positive");
  if (embedder.empty()) throw ValidationError("embedder id is empty");
  if (!check_paths) return;
  if (paths.background_dir.empty() || !fs::is_directory(paths.background_dir)) {
    throw ValidationError("background directory not found: " + paths.background_dir.string());
  }
  require_file(paths.object_image, "object image");
  require_file(paths.object_mask, "object mask");
  require_file(paths.trajectory, "trajectory file");
  require_file(paths.prompts, "prompts file");
  if (!prompt_library.empty()) require_file(prompt_library, "prompt library");
}

RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  RunConfig cfg;
  try {
    if (j.contains("case_dir")) cfg.paths = CasePaths::from_case_dir(resolve(base_dir, j.at("case_dir").get<std::string>()));
    const std::pair<const char*, fs::path*> path_keys[] = {
        {"background_dir", &cfg.paths.background_dir}, {"object_image", &cfg.paths.object_image},
        {"object_mask", &cfg.paths.object_mask},       {"trajectory", &cfg.paths.trajectory},
        {"prompts", &cfg.paths.prompts},               {"prompt_library", &cfg.prompt_library},
        {"output_dir", &cfg.output_dir}};
    for (const auto& [key, dst] : path_keys) {
      if (j.contains(key)) *dst = resolve(base_dir, j.at(key).get<std::string>());
    }
    read_opt(j, "case_id", cfg.case_id);
    if (j.contains("mode")) cfg.mode = mode_from_name(j.at("mode").get<std::string>());
    read_opt(j, "seed", cfg.seed);
    if (j.contains("pn")) {
      const auto& pn = j.at("pn");
      read_opt(pn, "sigma1", cfg.noise.sigma1);
      read_opt(pn, "sigma2", cfg.noise.sigma2);
    }
    if (j.contains("ln")) {
      const auto& ln = j.at("ln");
      read_opt(ln, "steps", cfg.ln.steps);
      read_opt(ln, "invert_steps", cfg.ln.invert_steps);
      read_opt(ln, "invert_conditioned", cfg.ln.invert_conditioned);
      read_opt(ln, "strict", cfg.ln.strict);
    }
    read_opt(j, "stage1_prompt", cfg.stage1_prompt);
    read_opt(j, "stage2_prompt", cfg.stage2_prompt);
    if (j.contains("injection")) {
      const auto& in = j.at("injection");
      read_opt(in, "feature_steps", cfg.injection.feature_steps);
      read_opt(in, "spatial_attn_steps", cfg.injection.spatial_attn_steps);
      read_opt(in, "temporal_attn_steps", cfg.injection.temporal_attn_steps);
      read_opt(in, "total_steps", cfg.injection.total_steps);
      read_opt(in, "blend", cfg.injection.blend);
    }
    if (j.contains("backend")) cfg.backend = backend_config_from_json(j.at("backend"));
    if (!cfg.backend.plugin_registry.empty()) {
      cfg.backend.plugin_registry = resolve(base_dir, cfg.backend.plugin_registry.string());
    }
    read_opt(j, "embedder", cfg.embedder);
    read_opt(j, "embedder_seed", cfg.embedder_seed);
    read_opt(j, "logit_scale", cfg.logit_scale);
    read_opt(j, "dump_latents", cfg.dump_latents);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.noise.seed = cfg.seed;
  cfg.ln.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {
      {"case_id", cfg.case_id},
      {"background_dir", cfg.paths.background_dir.string()},
      {"object_image", cfg.paths.object_image.string()},
      {"object_mask", cfg.paths.object_mask.string()},
      {"trajectory", cfg.paths.trajectory.string()},
      {"prompts", cfg.paths.prompts.string()},
      {"mode", std::string(mode_name(cfg.mode))},
      {"seed", cfg.seed},
      {"pn", {{"sigma1", cfg.noise.sigma1}, {"sigma2", cfg.noise.sigma2}}},
      {"ln",
       {{"steps", cfg.ln.steps},
        {"invert_steps", cfg.ln.invert_steps},
        {"invert_conditioned", cfg.ln.invert_conditioned},
        {"strict", cfg.ln.strict}}},
      {"stage1_prompt", cfg.stage1_prompt},
      {"stage2_prompt", cfg.stage2_prompt},
      {"injection", to_json(cfg.injection)},
      {"backend", to_json(cfg.backend)},
      {"embedder", cfg.embedder},
      {"embedder_seed", cfg.embedder_seed},
      {"logit_scale", cfg.logit_scale},
      {"prompt_library", cfg.prompt_library.string()},
      {"output_dir", cfg.output_dir.string()},
      {"dump_latents", cfg.dump_latents},
  };
}

std::string config_hash(const RunConfig& cfg) {
  auto j = to_json(cfg);
  // Where results go does not change what is computed.
  j.erase("output_dir");
  j.erase("dump_latents");
  return sha256_hex(j.dump());
}

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path resolve_output_dir(const RunConfig& cfg, const std::string& case_id) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return output_root() / (case_id.empty() ? std::string("case") : case_id);
}

}  // namespace dreaminsert
