#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dreaminsert/embedder.hpp"
#include "dreaminsert/geometry.hpp"
#include "dreaminsert/image.hpp"

namespace dreaminsert {

struct PromptEntry {
  std::string case_id;
  std::string optimal;
  std::string fake;
};

/// Paired optimal / fake prompts. Case ids are unique, prompts non-empty.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  explicit PromptLibrary(std::vector<PromptEntry> entries);

  static PromptLibrary from_json(const nlohmann::json& j);
  static PromptLibrary load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<PromptEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const PromptEntry* find(const std::string& case_id) const;

 private:
  std::vector<PromptEntry> entries_;
};

/// Mean per-frame cosine(image(pred_i), image(ref_i)) x 100.
double clip_i(const Clip& pred, const Clip& reference, const Embedder& emb);

/// Mean per-frame cosine(image(pred_i), text(prompt)) x 100.
double clip_t(const Clip& pred, const std::string& prompt, const Embedder& emb);

/// Per-frame cosine(image(crop(pred_i, box_i) resized to the object image),
/// image(object_image)).
std::vector<double> dino_bbox_per_frame(const Clip& pred, const TrajectorySequence& traj,
                                        const Frame& object_image, const Embedder& emb);
double dino_bbox(const Clip& pred, const TrajectorySequence& traj, const Frame& object_image, const Embedder& emb);

/// softmax(logit_scale * similarities), max-shifted.
std::vector<double> scaled_softmax(std::span<const double> similarities, double logit_scale);

struct PromptProbability {
  std::string case_id;
  bool optimal = false;
  double probability = 0.0;
};

/// Probabilities over the combined list (all optimal prompts, then all fake
/// prompts, library order) for one video.
std::vector<PromptProbability> adv_viclip_distribution(const Clip& pred, const PromptLibrary& library,
                                                       const Embedder& emb, double logit_scale = 100.0);

/// Probability assigned to the case's optimal prompt.
double adv_viclip(const Clip& pred, const std::string& case_id, const PromptLibrary& library,
                  const Embedder& emb, double logit_scale = 100.0);

struct MetricReport {
  static constexpr int kSchemaVersion = 1;

  std::string case_id;
  double clip_i = 0.0;  // x100
  double clip_t = 0.0;  // x100
  double dino = 0.0;
  std::optional<double> adv_viclip;
  std::vector<double> dino_per_frame;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct EvaluationInputs {
  const Clip* pred = nullptr;
  const Clip* reference = nullptr;  // the copy sequence
  std::string prompt;
  const TrajectorySequence* traj = nullptr;
  const Frame* object_image = nullptr;
  std::string case_id;
  const PromptLibrary* library = nullptr;  // optional; enables adv_viclip
  double logit_scale = 100.0;
};

MetricReport evaluate_case(const EvaluationInputs& in, const Embedder& emb);

/// Averages per-case reports; adv_viclip is averaged over the cases that have it.
nlohmann::json aggregate_reports(std::span<const MetricReport> reports);

void write_report(const std::filesystem::path& path, const MetricReport& report);

}  // namespace dreaminsert
