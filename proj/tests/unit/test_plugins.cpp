#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "dreaminsert/backend_registry.hpp"
#include "dreaminsert/embedder.hpp"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/latent.hpp"
#include "test_env.hpp"

using namespace dreaminsert;
namespace fs = std::filesystem;

namespace {

// Restores an environment variable on scope exit.
class EnvGuard {
 public:
  explicit EnvGuard(const char* name) : name_(name) {
    if (const char* v = std::getenv(name)) old_ = v, had_ = true;
  }
  ~EnvGuard() {
    if (had_) {
      ::setenv(name_, old_.c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::string old_;
  bool had_ = false;
};

}  // namespace

TEST_CASE("registry: resolution and errors") {
  testenv::TempDir dir("reg");
  std::ofstream(dir / "r.json") << R"({"backends":{"a":{"library":"libs/liba.so"},"b":{"library":"/abs/libb.so"}},
                                       "embedders":{"e":{"library":"libe.so"}}})";
  CHECK(resolve_plugin_library(dir / "r.json", "backends", "a") == dir / "libs/liba.so");
  CHECK(resolve_plugin_library(dir / "r.json", "backends", "b") == fs::path("/abs/libb.so"));
  CHECK(resolve_plugin_library(dir / "r.json", "embedders", "e") == dir / "libe.so");
  CHECK_THROWS_AS(resolve_plugin_library(dir / "r.json", "backends", "e"), ValidationError);
  CHECK_THROWS_AS(resolve_plugin_library(dir / "missing.json", "backends", "a"), ValidationError);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(resolve_plugin_library(dir / "bad.json", "backends", "a"), ValidationError);

  BackendConfig cfg;
  cfg.id = "external:a";
  cfg.plugin_registry = dir / "r.json";
  CHECK_THROWS_AS(make_backend(cfg), ValidationError);  // library file absent
}

TEST_CASE("registry: environment fallback") {
  EnvGuard guard("DREAMINSERT_PLUGIN_REGISTRY");
  ::unsetenv("DREAMINSERT_PLUGIN_REGISTRY");
  CHECK_THROWS_AS(plugin_registry_path({}), ValidationError);
  CHECK(plugin_registry_path("/x/r.json") == fs::path("/x/r.json"));
  ::setenv("DREAMINSERT_PLUGIN_REGISTRY", testenv::registry().c_str(), 1);
  CHECK(plugin_registry_path({}) == testenv::registry());
  CHECK(plugin_registry_path("/x/r.json") == fs::path("/x/r.json"));

  BackendConfig cfg;
  cfg.id = "external:test";
  auto backend = make_backend(cfg);
  CHECK(backend->id() == "external:test");
}

TEST_CASE("plugins: external backend loads and runs") {
  BackendConfig cfg;
  cfg.id = "external:test";
  cfg.plugin_registry = testenv::registry();
  auto backend = make_backend(cfg);
  CHECK(backend->id() == "external:test");
  CHECK(backend->schedule().T() == 1000);
  const LatentClip z(2, LatentShape{3, 4, 4});
  const LatentClip one(1, LatentShape{3, 4, 4});
  const auto eps = backend->predict_noise(one, 500, Condition{}, StepContext{}, nullptr);
  CHECK(eps.frames() == 1);

  cfg.options = {{"fail_whole_clip", true}};
  auto failing = make_backend(cfg);
  CHECK_THROWS(failing->predict_noise(z, 500, Condition{}, StepContext{}, nullptr));

  cfg.id = "external:unknown";
  CHECK_THROWS_AS(make_backend(cfg), ValidationError);
}

TEST_CASE("plugins: external embedder receives the seed") {
  auto a = make_embedder("external:test", 3, testenv::registry());
  CHECK(a->dim() == 32);
  const ToyEmbedder ref(3, 32);
  const Frame f(16, 16, 0.3f);
  CHECK(a->image_embed(f) == ref.image_embed(f));
  CHECK(a->text_embed("red ball") == ref.text_embed("red ball"));
  auto b = make_embedder("external:test", 4, testenv::registry());
  CHECK(a->image_embed(f) != b->image_embed(f));

  CHECK(make_embedder("toy", 0)->id() == "toy");
  CHECK_THROWS_AS(make_embedder("clip", 0), ValidationError);
  CHECK_THROWS_AS(make_embedder("external:nope", 0, testenv::registry()), ValidationError);
}
