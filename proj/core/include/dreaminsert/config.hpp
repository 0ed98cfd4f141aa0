#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dreaminsert/backend_registry.hpp"
#include "dreaminsert/pixel_noise.hpp"
#include "dreaminsert/stage1_latent.hpp"
#include "dreaminsert/stage2_align.hpp"

namespace dreaminsert {

/// Output root used when a config names no output directory.
inline constexpr const char* kOutputRootEnv = "DREAMINSERT_OUTPUT_ROOT";

/// Files of one case. `from_case_dir` fills the canonical layout:
///   background/frame_####.png, object.png, object_mask.png,
///   trajectory.json, prompts.json
struct CasePaths {
  std::filesystem::path background_dir;
  std::filesystem::path object_image;
  std::filesystem::path object_mask;
  std::filesystem::path trajectory;
  std::filesystem::path prompts;

  static CasePaths from_case_dir(const std::filesystem::path& dir);
};

/// prompts.json of a case. `object` conditions stage 1, `align` stage 2;
/// `optimal` / `fake` form the case's prompt-library entry.
struct CasePrompts {
  std::string case_id;
  std::string object;
  std::string align;
  std::string optimal;
  std::string fake;

  static CasePrompts from_json(const nlohmann::json& j);
  static CasePrompts load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

enum class Stage1Mode { pn, ln };

std::string_view mode_name(Stage1Mode mode) noexcept;
Stage1Mode mode_from_name(std::string_view name);

struct RunConfig {
  std::string case_id;  // empty: taken from prompts.json
  CasePaths paths;
  Stage1Mode mode = Stage1Mode::ln;
  std::uint64_t seed = 0;
  NoiseConfig noise;  // pn only; seed mirrors `seed`
  LnInjOptions ln;    // ln only; seed mirrors `seed`
  std::string stage1_prompt;  // empty: prompts.json "object"
  std::string stage2_prompt;  // empty: prompts.json "align"
  InjectionSchedule injection;
  BackendConfig backend;
  std::string embedder = "toy";
  std::uint64_t embedder_seed = 0;
  double logit_scale = 100.0;
  std::filesystem::path prompt_library;  // optional; enables adv_viclip
  std::filesystem::path output_dir;
  bool dump_latents = false;

  /// Checks parameter ranges and, when `check_paths`, that every referenced
  /// input exists. Throws ValidationError.
  void validate(bool check_paths = true) const;
};

/// Relative paths resolve against `base_dir`. A "case_dir" key fills the
/// canonical case paths; explicit path keys override it. The output
/// directory falls back to $DREAMINSERT_OUTPUT_ROOT/<case_id>, then
/// runs/<case_id>, when resolved by `resolve_output_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// SHA-256 of the canonical (key-sorted, compact) config serialization.
std::string config_hash(const RunConfig& cfg);

std::filesystem::path output_root();
std::filesystem::path resolve_output_dir(const RunConfig& cfg, const std::string& case_id);

}  // namespace dreaminsert
