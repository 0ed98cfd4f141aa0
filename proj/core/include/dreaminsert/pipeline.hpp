#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dreaminsert/compositor.hpp"
#include "dreaminsert/config.hpp"
#include "dreaminsert/dataset.hpp"
#include "dreaminsert/embedder.hpp"
#include "dreaminsert/metrics.hpp"

namespace dreaminsert {

const char* version() noexcept;

/// In-memory products of one run. Clips crossing a stage boundary are
/// quantized to 8 bits, exactly as if they had been written to PNG and read
/// back, so a stage-by-stage CLI run sees the same inputs.
struct PipelineResult {
  std::string case_id;
  CopySequence copy;
  Clip coarse;
  Clip aligned;
  LatentClip z_copy;
  std::optional<LnInjResult> ln;
  LatentClip zeta;
  MetricReport report;
  std::vector<std::string> warnings;
  nlohmann::json stages = nlohmann::json::object();
};

/// Called after each stage completes, with the stage name.
using StageCallback = std::function<void(std::string_view stage, const PipelineResult& partial)>;

/// geometry -> compositor -> (pixel_noise | stage1_latent) -> stage2_align ->
/// metrics, then the cross-stage invariant checks. Failures inside a stage are
/// rethrown as StageError naming it.
PipelineResult run_pipeline(const CaseInputs& inputs, const RunConfig& cfg, DiffusionBackend& backend,
                            const Embedder& embedder, const PromptLibrary* library = nullptr,
                            const StageCallback& on_stage = {});

/// Cross-stage checks: background preserved by the compositor, finite outputs,
/// matching lengths and frame sizes. Returns the failures.
std::vector<std::string> check_invariants(const CaseInputs& inputs, const PipelineResult& result);

struct RunManifest {
  static constexpr int kSchemaVersion = 1;

  std::string case_id;
  std::string status = "ok";  // ok | failed
  std::string failed_stage;
  std::string error;
  std::string config_hash;
  nlohmann::json config;
  std::map<std::string, std::string> input_hashes;
  nlohmann::json seeds = nlohmann::json::object();
  std::string tool_version;
  std::string started_at;  // UTC, ISO 8601
  double wall_clock_s = 0.0;
  std::map<std::string, std::string> outputs;        // stage -> path
  std::map<std::string, std::string> output_hashes;  // relative path -> sha256
  nlohmann::json metrics;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Writes `<path>.tmp` then renames it over `path`.
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);

/// Validates, loads the case, runs the pipeline and persists everything under
/// the output directory:
///   copy/ masks/ coarse/ align/ [latents/] report.json manifest.json
/// On a stage failure the outputs written so far are kept, manifest.json
/// records the failure, and StageError is rethrown.
RunManifest run_case(const RunConfig& cfg);

/// Parameter sweep. Axes name a RunConfig parameter: sigma1, sigma2,
/// feature_steps, spatial_attn_steps, temporal_attn_steps, total_steps,
/// blend, ln_steps, seed.
struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct Sweep {
  std::vector<SweepAxis> axes;
  /// false: cartesian product. true: axes are zipped (equal lengths).
  bool listed = false;

  static Sweep from_json(const nlohmann::json& j);
};

void apply_parameter(RunConfig& cfg, const std::string& parameter, double value);
double parameter_value(const RunConfig& cfg, const std::string& parameter);

/// One config per sweep point; output dirs are <base out>/run_###.
std::vector<RunConfig> expand_sweep(const RunConfig& base, const Sweep& sweep);

struct AblationResult {
  std::vector<RunManifest> manifests;
  std::filesystem::path summary;  // summary.tsv
};

/// Runs every sweep point on up to `jobs` workers. Failed points are recorded
/// in their manifests and the summary rather than thrown.
AblationResult ablate(const RunConfig& base, const Sweep& sweep, int jobs = 1);

}  // namespace dreaminsert
