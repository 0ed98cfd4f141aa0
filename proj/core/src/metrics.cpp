#include "dreaminsert/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

PromptLibrary::PromptLibrary(std::vector<PromptEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.case_id.empty()) throw ValidationError("prompt library: empty case_id");
    if (e.optimal.empty() || e.fake.empty()) {
      throw ValidationError("prompt library: case '" + e.case_id + "' needs non-empty optimal and fake prompts");
    }
    if (!seen.insert(e.case_id).second) throw ValidationError("prompt library: duplicate case_id '" + e.case_id + "'");
  }
}

PromptLibrary PromptLibrary::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("prompt library: expected a JSON array");
  std::vector<PromptEntry> entries;
  for (const auto& e : j) {
    try {
      entries.push_back({e.at("case_id").get<std::string>(), e.at("optimal").get<std::string>(),
                         e.at("fake").get<std::string>()});
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(std::string("prompt library entry: ") + ex.what());
    }
  }
  return PromptLibrary(std::move(entries));
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open prompt library " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("prompt library " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json PromptLibrary::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries_) arr.push_back({{"case_id", e.case_id}, {"optimal", e.optimal}, {"fake", e.fake}});
  return arr;
}

const PromptEntry* PromptLibrary::find(const std::string& case_id) const {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const PromptEntry& e) { return e.case_id == case_id; });
  return it == entries_.end() ? nullptr : &*it;
}

double clip_i(const Clip& pred, const Clip& reference, const Embedder& emb) {
  validate_clip(pred);
  if (pred.size() != reference.size()) throw ValidationError("clip_i: clips differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += cosine(emb.image_embed(pred.frames[i]), emb.image_embed(reference.frames[i]));
  }
  return 100.0 * sum / static_cast<double>(pred.size());
}

double clip_t(const Clip& pred, const std::string& prompt, const Embedder& emb) {
  validate_clip(pred);
  const auto t = emb.text_embed(prompt);
  double sum = 0.0;
  for (const auto& f : pred.frames) sum += cosine(emb.image_embed(f), t);
  return 100.0 * sum / static_cast<double>(pred.size());
}

std::vector<double> dino_bbox_per_frame(const Clip& pred, const TrajectorySequence& traj,
                                        const Frame& object_image, const Embedder& emb) {
  validate_clip(pred);
  if (traj.size() != pred.size()) throw ValidationError("dino_bbox: trajectory length differs from the clip");
  if (object_image.width() < 1 || object_image.height() < 1) throw ValidationError("dino_bbox: empty object image");
  const auto ref = emb.image_embed(object_image);
  std::vector<double> out;
  out.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const BBox& b = traj.boxes[i];
    if (!b.fits(pred.frames[i].size())) throw ValidationError("dino_bbox: degenerate or out-of-frame box " + std::to_string(i));
    const Frame region = resize_bilinear(crop(pred.frames[i], b), object_image.width(), object_image.height());
    out.push_back(cosine(emb.image_embed(region), ref));
  }
  return out;
}

double dino_bbox(const Clip& pred, const TrajectorySequence& traj, const Frame& object_image, const Embedder& emb) {
  const auto per_frame = dino_bbox_per_frame(pred, traj, object_image, emb);
  double sum = 0.0;
  for (double v : per_frame) sum += v;
  return sum / static_cast<double>(per_frame.size());
}

std::vector<double> scaled_softmax(std::span<const double> similarities, double logit_scale) {
  if (similarities.empty()) throw ValidationError("softmax over an empty prompt list");
  if (!(logit_scale > 0.0)) throw ValidationError("logit_scale must be positive");
  std::vector<double> p(similarities.size());
  double mx = -INFINITY;
  for (double s : similarities) mx = std::max(mx, logit_scale * s);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logit_scale * similarities[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<PromptProbability> adv_viclip_distribution(const Clip& pred, const PromptLibrary& library,
                                                       const Embedder& emb, double logit_scale) {
  if (library.size() == 0) throw ValidationError("adv_viclip: prompt library is empty");
  const auto v = emb.video_embed(pred);
  std::vector<double> sims;
  std::vector<PromptProbability> out;
  sims.reserve(2 * library.size());
  for (bool optimal : {true, false}) {
    for (const auto& e : library.entries()) {
      sims.push_back(cosine(v, emb.text_embed(optimal ? e.optimal : e.fake)));
      out.push_back({e.case_id, optimal, 0.0});
    }
  }
  const auto p = scaled_softmax(sims, logit_scale);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].probability = p[i];
  return out;
}

double adv_viclip(const Clip& pred, const std::string& case_id, const PromptLibrary& library, const Embedder& emb,
                  double logit_scale) {
  if (!library.find(case_id)) throw ValidationError("adv_viclip: case '" + case_id + "' not in the prompt library");
  for (const auto& pp : adv_viclip_distribution(pred, library, emb, logit_scale)) {
    if (pp.optimal && pp.case_id == case_id) return pp.probability;
  }
  throw ValidationError("adv_viclip: case '" + case_id + "' not in the prompt library");
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = {
      {"schema_version", kSchemaVersion},
      {"case_id", case_id},
      {"clip_i", clip_i},
      {"clip_t", clip_t},
      {"dino", dino},
      {"adv_viclip", adv_viclip ? nlohmann::json(*adv_viclip) : nlohmann::json(nullptr)},
      {"dino_per_frame", dino_per_frame},
      {"config", config},
  };
  return j;
}

MetricReport evaluate_case(const EvaluationInputs& in, const Embedder& emb) {
  if (!in.pred || !in.reference || !in.traj || !in.object_image) {
    throw ValidationError("evaluate_case: prediction, reference, trajectory and object image are required");
  }
  MetricReport r;
  r.case_id = in.case_id;
  r.clip_i = clip_i(*in.pred, *in.reference, emb);
  r.clip_t = clip_t(*in.pred, in.prompt, emb);
  r.dino_per_frame = dino_bbox_per_frame(*in.pred, *in.traj, *in.object_image, emb);
  double sum = 0.0;
  for (double v : r.dino_per_frame) sum += v;
  r.dino = sum / static_cast<double>(r.dino_per_frame.size());
  if (in.library) r.adv_viclip = adv_viclip(*in.pred, in.case_id, *in.library, emb, in.logit_scale);
  r.config = {{"embedder", emb.id()}, {"embed_dim", emb.dim()}, {"logit_scale", in.logit_scale}, {"prompt", in.prompt}};
  return r;
}

nlohmann::json aggregate_reports(std::span<const MetricReport> reports) {
  if (reports.empty()) throw ValidationError("aggregate_reports: no reports");
  double ci = 0, ct = 0, dn = 0, av = 0;
  std::size_t n_adv = 0;
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& r : reports) {
    ci += r.clip_i;
    ct += r.clip_t;
    dn += r.dino;
    if (r.adv_viclip) {
      av += *r.adv_viclip;
      ++n_adv;
    }
    cases.push_back(r.to_json());
  }
  const auto n = static_cast<double>(reports.size());
  return {{"schema_version", MetricReport::kSchemaVersion},
          {"cases", std::move(cases)},
          {"average",
           {{"clip_i", ci / n},
            {"clip_t", ct / n},
            {"dino", dn / n},
            {"adv_viclip", n_adv ? nlohmann::json(av / static_cast<double>(n_adv)) : nlohmann::json(nullptr)}}}};
}

void write_report(const std::filesystem::path& path, const MetricReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report.to_json().dump(2) << '\n';
}

}  // namespace dreaminsert
