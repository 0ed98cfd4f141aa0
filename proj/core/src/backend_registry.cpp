#include "dreaminsert/backend_registry.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <fstream>

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kExternalPrefix = "external:";

/// Delegates to an adapter-created backend and keeps its library loaded.
class PluginBackend final : public DiffusionBackend {
 public:
  PluginBackend(std::shared_ptr<PluginLibrary> lib, std::unique_ptr<DiffusionBackend> impl)
      : lib_(std::move(lib)), impl_(std::move(impl)) {}
  ~PluginBackend() override { impl_.reset(); }

  std::string id() const override { return impl_->id(); }
  const NoiseSchedule& schedule() const override { return impl_->schedule(); }
  const Codec& codec() const override { return impl_->codec(); }
  std::vector<Site> sites() const override { return impl_->sites(); }
  LatentClip predict_noise(const LatentClip& z, int t, const Condition& cond, const StepContext& ctx,
                           SiteHook* hook) override {
    return impl_->predict_noise(z, t, cond, ctx, hook);
  }
  void reset() override { impl_->reset(); }

 private:
  std::shared_ptr<PluginLibrary> lib_;
  std::unique_ptr<DiffusionBackend> impl_;
};

std::unique_ptr<Codec> make_codec(const BackendConfig& cfg) {
  if (cfg.codec == "identity") return std::make_unique<IdentityCodec>();
  if (cfg.codec == "pool") return std::make_unique<PoolCodec>(cfg.factor, cfg.channels);
  throw ValidationError("unknown codec '" + cfg.codec + "' (expected identity or pool)");
}

}  // namespace

BackendConfig backend_config_from_json(const nlohmann::json& j) {
  BackendConfig cfg;
  if (j.is_string()) {
    cfg.id = j.get<std::string>();
    return cfg;
  }
  if (!j.is_object()) throw ValidationError("backend config must be a string or an object");
  cfg.id = j.value("id", cfg.id);
  cfg.codec = j.value("codec", cfg.codec);
  cfg.factor = j.value("factor", cfg.factor);
  cfg.channels = j.value("channels", cfg.channels);
  cfg.train_steps = j.value("train_steps", cfg.train_steps);
  cfg.beta_start = j.value("beta_start", cfg.beta_start);
  cfg.beta_end = j.value("beta_end", cfg.beta_end);
  cfg.constant = j.value("constant", cfg.constant);
  cfg.linear.seed = j.value("seed", cfg.linear.seed);
  if (j.contains("linear")) {
    const auto& l = j.at("linear");
    cfg.linear.lipschitz = l.value("lipschitz", cfg.linear.lipschitz);
    cfg.linear.spatial_gain = l.value("spatial_gain", cfg.linear.spatial_gain);
    cfg.linear.temporal_gain = l.value("temporal_gain", cfg.linear.temporal_gain);
    cfg.linear.score_scale = l.value("score_scale", cfg.linear.score_scale);
    cfg.linear.condition_gain = l.value("condition_gain", cfg.linear.condition_gain);
  }
  if (j.contains("plugin_registry")) cfg.plugin_registry = j.at("plugin_registry").get<std::string>();
  if (j.contains("options")) cfg.options = j.at("options");
  return cfg;
}

nlohmann::json to_json(const BackendConfig& cfg) {
  nlohmann::json j = {
      {"id", cfg.id},
      {"codec", cfg.codec},
      {"factor", cfg.factor},
      {"channels", cfg.channels},
      {"train_steps", cfg.train_steps},
      {"beta_start", cfg.beta_start},
      {"beta_end", cfg.beta_end},
      {"constant", cfg.constant},
      {"seed", cfg.linear.seed},
      {"linear",
       {{"lipschitz", cfg.linear.lipschitz},
        {"spatial_gain", cfg.linear.spatial_gain},
        {"temporal_gain", cfg.linear.temporal_gain},
        {"score_scale", cfg.linear.score_scale},
        {"condition_gain", cfg.linear.condition_gain}}},
      {"options", cfg.options},
  };
  if (!cfg.plugin_registry.empty()) j["plugin_registry"] = cfg.plugin_registry.string();
  return j;
}

fs::path plugin_registry_path(const fs::path& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* env = std::getenv("DREAMINSERT_PLUGIN_REGISTRY"); env && *env) return env;
  throw ValidationError("external adapter requested but no plugin registry is configured "
                        "(set plugin_registry or DREAMINSERT_PLUGIN_REGISTRY)");
}

fs::path resolve_plugin_library(const fs::path& registry, const std::string& kind, const std::string& adapter_id) {
  std::ifstream in(registry);
  if (!in) throw ValidationError("cannot open plugin registry " + registry.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("plugin registry " + registry.string() + ": " + e.what());
  }
  if (!j.contains(kind) || !j.at(kind).contains(adapter_id)) {
    throw ValidationError("plugin registry has no " + kind + " entry '" + adapter_id + "'");
  }
  fs::path lib = j.at(kind).at(adapter_id).at("library").get<std::string>();
  if (lib.is_relative()) lib = registry.parent_path() / lib;
  return lib;
}

PluginLibrary::PluginLibrary(const fs::path& library) : path_(library.string()) {
  handle_ = dlopen(path_.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (!handle_) throw ValidationError("cannot load plugin " + path_ + ": " + dlerror());
}

PluginLibrary::~PluginLibrary() {
  if (handle_) dlclose(handle_);
}

void* PluginLibrary::symbol(const char* name) const {
  void* sym = dlsym(handle_, name);
  if (!sym) throw ValidationError("plugin " + path_ + " does not export " + name);
  return sym;
}

std::unique_ptr<DiffusionBackend> make_backend(const BackendConfig& cfg) {
  if (cfg.id.starts_with(kExternalPrefix)) {
    const std::string adapter = cfg.id.substr(kExternalPrefix.size());
    const fs::path registry = plugin_registry_path(cfg.plugin_registry);
    auto lib = std::make_shared<PluginLibrary>(resolve_plugin_library(registry, "backends", adapter));
    using Factory = DiffusionBackend* (*)(const char*);
    auto factory = reinterpret_cast<Factory>(lib->symbol(kBackendFactorySymbol));
    const std::string options = cfg.options.dump();
    std::unique_ptr<DiffusionBackend> impl(factory(options.c_str()));
    if (!impl) throw ValidationError("plugin '" + adapter + "' returned no backend");
    return std::make_unique<PluginBackend>(std::move(lib), std::move(impl));
  }

  auto schedule = NoiseSchedule::linear_beta(cfg.train_steps, cfg.beta_start, cfg.beta_end);
  if (cfg.id == "toy-zero") return std::make_unique<ZeroNoiseBackend>(std::move(schedule), make_codec(cfg));
  if (cfg.id == "toy-const") {
    return std::make_unique<ConstantNoiseBackend>(std::move(schedule), make_codec(cfg), cfg.constant);
  }
  if (cfg.id == "toy-linear") {
    return std::make_unique<LinearNoiseBackend>(std::move(schedule), make_codec(cfg), cfg.linear);
  }
  if (cfg.id == "toy-replay") {
    return std::make_unique<ReplayNoiseBackend>(std::move(schedule), make_codec(cfg), cfg.linear);
  }
  throw ValidationError("unknown backend '" + cfg.id +
                        "' (expected toy-zero, toy-const, toy-linear, toy-replay or external:<id>)");
}

}  // namespace dreaminsert
