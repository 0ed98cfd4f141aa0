#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "dreaminsert/backend.hpp"
#include "dreaminsert/toy_backends.hpp"

namespace dreaminsert {

/// Backend selection. `id` is one of toy-zero, toy-const, toy-linear,
/// toy-replay or external:<adapter-id>.
struct BackendConfig {
  std::string id = "toy-linear";
  std::string codec = "identity";  // identity | pool
  int factor = 8;                  // pool codec only
  int channels = 4;                // pool codec only
  int train_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double constant = 0.1;  // toy-const value
  LinearPredictorParams linear;
  /// Registry file for external adapters. Empty: $DREAMINSERT_PLUGIN_REGISTRY.
  std::filesystem::path plugin_registry;
  /// Passed verbatim to external adapters.
  nlohmann::json options = nlohmann::json::object();
};

BackendConfig backend_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendConfig& cfg);

std::unique_ptr<DiffusionBackend> make_backend(const BackendConfig& cfg);

/// Entry point an external backend library exports:
///   extern "C" dreaminsert::DiffusionBackend* dreaminsert_create_backend(const char* options_json);
/// The returned object is owned (and deleted) by the host.
inline constexpr const char* kBackendFactorySymbol = "dreaminsert_create_backend";

/// Registry file layout:
///   { "backends":  { "<adapter-id>": { "library": "libfoo.so" } },
///     "embedders": { "<adapter-id>": { "library": "libbar.so" } } }
/// Relative library paths resolve against the registry file's directory.
std::filesystem::path resolve_plugin_library(const std::filesystem::path& registry, const std::string& kind,
                                             const std::string& adapter_id);

/// Resolves the registry path: explicit if non-empty, else the
/// DREAMINSERT_PLUGIN_REGISTRY environment variable.
std::filesystem::path plugin_registry_path(const std::filesystem::path& explicit_path);

/// dlopen handle kept alive for as long as any object created from it.
class PluginLibrary {
 public:
  explicit PluginLibrary(const std::filesystem::path& library);
  ~PluginLibrary();
  PluginLibrary(const PluginLibrary&) = delete;
  PluginLibrary& operator=(const PluginLibrary&) = delete;

  void* symbol(const char* name) const;

 private:
  void* handle_ = nullptr;
  std::string path_;
};

}  // namespace dreaminsert
