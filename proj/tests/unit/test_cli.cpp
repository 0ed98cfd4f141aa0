#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dreaminsert/config.hpp"
#include "dreaminsert/dataset.hpp"
#include "dreaminsert/hash.hpp"
#include "dreaminsert/image_io.hpp"
#include "dreaminsert/trajectory_io.hpp"
#include "test_env.hpp"

using namespace dreaminsert;
namespace fs = std::filesystem;

namespace {

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// Runs the CLI with `args` (already shell-quoted where needed); returns the exit status.
int cli(const std::string& args, const fs::path& log, const std::string& env = {}) {
  const std::string cmd =
      env + (env.empty() ? "" : " ") + quote(testenv::cli().string()) + " " + args + " > " + quote(log.string()) + " 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string q(const fs::path& p) { return quote(p.string()); }

void check_same_pngs(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (;; ++n) {
    const fs::path fa = a / frame_filename(n), fb = b / frame_filename(n);
    if (!fs::exists(fa)) break;
    REQUIRE(fs::exists(fb));
    CHECK_MESSAGE(sha256_file(fa) == sha256_file(fb), fa.filename().string());
  }
  CHECK(n > 0);
  CHECK(!fs::exists(b / frame_filename(n)));
}

}  // namespace

TEST_CASE("cli: make-case reproduces the bundled case") {
  testenv::TempDir dir("cli-case");
  REQUIRE(cli("make-case --synthetic --out " + q(dir / "case"), dir / "log") == 0);
  for (const char* f : {"object.png", "object_mask.png", "trajectory.json", "prompts.json", "background/frame_0015.png"}) {
    CHECK_MESSAGE(sha256_file(dir / "case" / f) == sha256_file(testenv::bundled_case() / f), f);
  }
  CHECK(cli("make-case --out " + q(dir / "x"), dir / "log") == 2);
}

TEST_CASE("cli: trajgen from flags and from a spec") {
  testenv::TempDir dir("cli-traj");
  REQUIRE(cli("trajgen --init 2,3,8,8 --delta 4,0,0,0 --frames 5 --width 32 --height 32 --out " + q(dir / "t.json") +
                  " --masks " + q(dir / "m"),
              dir / "log") == 0);
  const TrajectorySequence t = load_trajectory(dir / "t.json");
  REQUIRE(t.size() == 5);
  CHECK(t.boxes[4] == BBox{18, 3, 8, 8});
  CHECK(load_mask_png(dir / "m" / "trajectory_0004.png") == rasterize(t.boxes[4], t.frame));

  std::ofstream(dir / "spec.json") << R"({"width":32,"height":32,"init":{"x0":0,"y0":0,"w":4,"h":4},"deltas":[{"dx":30,"dy":0,"dw":0,"dh":0}],"frames":3})";
  REQUIRE(cli("trajgen --spec " + q(dir / "spec.json") + " --out " + q(dir / "s.json"), dir / "log") == 0);
  const TrajectorySequence s = load_trajectory(dir / "s.json");
  REQUIRE(s.size() == 3);
  CHECK(s.boxes[1].x0 == 28);

  CHECK(cli("trajgen --init 1,2,3 --out " + q(dir / "u.json"), dir / "log") == 2);
  CHECK(cli("trajgen --init 40,0,8,8 --width 32 --height 32 --out " + q(dir / "u.json"), dir / "log") == 2);
  CHECK(cli("trajgen --spec " + q(dir / "missing.json") + " --out " + q(dir / "u.json"), dir / "log") == 2);
}

TEST_CASE("cli: stage-by-stage run matches the one-shot run") {
  testenv::TempDir dir("cli-parity");
  const fs::path c = testenv::bundled_case();
  const std::string prompt = CasePrompts::load(c / "prompts.json").object;
  const std::string common = " --backend toy-linear";
  const std::string inj = " --inject-feature 3 --inject-sattn 3 --inject-tattn 2 --steps 12";

  REQUIRE(cli("run --case " + q(c) + " --out " + q(dir / "run") + " --mode ln --ln-steps 12 --feature-steps 3" +
                  " --spatial-attn-steps 3 --temporal-attn-steps 2 --total-steps 12 --library " +
                  q(testenv::source_dir() / "data" / "prompt_library.json") + common,
              dir / "run.log") == 0);
  REQUIRE(cli("compose --case " + q(c) + " --out " + q(dir / "s"), dir / "compose.log") == 0);
  check_same_pngs(dir / "run" / "copy", dir / "s" / "copy");
  for (const char* m : {"merged_0007.png", "interaction_0007.png", "trajectory_0007.png"}) {
    CHECK(sha256_file(dir / "run" / "masks" / m) == sha256_file(dir / "s" / "masks" / m));
  }

  REQUIRE(cli("stage1 --mode ln --steps 12 --prompt " + quote(prompt) + " --copy " + q(dir / "s" / "copy") +
                  " --masks " + q(dir / "s" / "masks") + " --out " + q(dir / "s" / "coarse") + common,
              dir / "s1.log") == 0);
  check_same_pngs(dir / "run" / "coarse", dir / "s" / "coarse");

  REQUIRE(cli("stage2 --prompt " + quote(prompt) + " --copy " + q(dir / "s" / "copy") + " --coarse " +
                  q(dir / "s" / "coarse") + " --out " + q(dir / "s" / "align") + " --dump-latents " +
                  q(dir / "s" / "latents") + inj + common,
              dir / "s2.log") == 0);
  check_same_pngs(dir / "run" / "align", dir / "s" / "align");
  CHECK(fs::exists(dir / "s" / "latents" / "zeta.bin"));
  CHECK(fs::exists(dir / "s" / "latents" / "zeta.json"));

  REQUIRE(cli("eval --pred " + q(dir / "s" / "align") + " --case-dir " + q(c) + " --library " +
                  q(testenv::source_dir() / "data" / "prompt_library.json") + " --out " + q(dir / "s" / "report.json"),
              dir / "eval.log") == 0);
  const auto a = read_json(dir / "run" / "report.json");
  const auto b = read_json(dir / "s" / "report.json");
  for (const char* k : {"clip_i", "clip_t", "dino", "adv_viclip"}) {
    CHECK_MESSAGE(a.at(k).get<double>() == doctest::Approx(b.at(k).get<double>()).epsilon(1e-12), k);
  }
}

TEST_CASE("cli: pn stage 1 and eval to stdout") {
  testenv::TempDir dir("cli-pn");
  const fs::path c = testenv::bundled_case();
  REQUIRE(cli("compose --case " + q(c) + " --out " + q(dir / "s"), dir / "log") == 0);
  REQUIRE(cli("stage1 --mode pn --sigma1 0 --sigma2 0 --copy " + q(dir / "s" / "copy") + " --masks " +
                  q(dir / "s" / "masks") + " --out " + q(dir / "coarse"),
              dir / "log") == 0);
  check_same_pngs(dir / "s" / "copy", dir / "coarse");
  REQUIRE(cli("eval --pred " + q(dir / "coarse") + " --case-dir " + q(c), dir / "eval.json") == 0);
  const auto report = read_json(dir / "eval.json");
  CHECK(report.at("clip_i").get<double>() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(report.at("adv_viclip").is_null());

  CHECK(cli("stage1 --mode pn --sigma1 2 --copy " + q(dir / "s" / "copy") + " --masks " + q(dir / "s" / "masks") +
                " --out " + q(dir / "c2"),
            dir / "log") == 2);
  CHECK(cli("stage1 --mode ln --copy " + q(dir / "s" / "copy") + " --masks " + q(dir / "s" / "masks") + " --out " +
                q(dir / "c2"),
            dir / "log") == 2);
}

TEST_CASE("cli: exit codes") {
  testenv::TempDir dir("cli-exit");
  const fs::path c = testenv::bundled_case();
  CHECK(cli("", dir / "log") == 2);
  CHECK(cli("run --no-such-flag", dir / "log") == 2);
  CHECK(cli("frobnicate", dir / "log") == 2);
  CHECK(cli("run --case " + q(dir / "nowhere") + " --out " + q(dir / "o"), dir / "log") == 2);
  CHECK(cli("run --case " + q(c) + " --out " + q(dir / "o") + " --mode xx", dir / "log") == 2);
  CHECK(cli("run --case " + q(c) + " --out " + q(dir / "o") + " --total-steps 0", dir / "log") == 2);
  CHECK(cli("run --case " + q(c) + " --out " + q(dir / "o") + " --backend toy-zero --feature-steps 1", dir / "log") == 2);
  CHECK(cli("--version", dir / "log") == 0);

  std::ofstream(dir / "opts.json") << R"({"id":"external:test","options":{"fail_whole_clip":true}})";
  const std::string failing = " --backend-config " + q(dir / "opts.json") + " --plugin-registry " +
                              q(testenv::registry()) +
                              " --feature-steps 0 --spatial-attn-steps 0 --temporal-attn-steps 0 --total-steps 5";
  CHECK(cli("run --case " + q(c) + " --out " + q(dir / "f") + " --mode pn" + failing, dir / "fail.log") == 3);
  CHECK(slurp(dir / "fail.log").find("stage2_align") != std::string::npos);
  CHECK(read_json(dir / "f" / "manifest.json").at("status") == "failed");
}

TEST_CASE("cli: output root from the environment") {
  testenv::TempDir dir("cli-env");
  const std::string env = "DREAMINSERT_OUTPUT_ROOT=" + q(dir / "root");
  REQUIRE(cli("run --config " + q(testenv::source_dir() / "data" / "configs" / "synthetic.json") +
                  " --mode pn --total-steps 5",
              dir / "log", env) == 0);
  CHECK(fs::exists(dir / "root" / "synthetic-0" / "manifest.json"));
  CHECK(fs::exists(dir / "root" / "synthetic-0" / "align" / "frame_0015.png"));
}

TEST_CASE("cli: ablate writes a summary and reports failures") {
  testenv::TempDir dir("cli-ablate");
  const fs::path c = testenv::bundled_case();
  const std::string base = "ablate --case " + q(c) + " --mode pn --total-steps 4 --feature-steps 2 --spatial-attn-steps 2 --temporal-attn-steps 2 --jobs 2";
  REQUIRE(cli(base + " --out " + q(dir / "a") + " --grid sigma1=0.2,0.4 --grid feature_steps=0,2", dir / "log") == 0);
  std::ifstream in(dir / "a" / "summary.tsv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 5);
  CHECK(fs::exists(dir / "a" / "sweep.json"));

  std::ofstream(dir / "sweep.json") << R"({"mode":"listed","axes":[{"parameter":"sigma1","values":[0.1,0.2]},
                                          {"parameter":"sigma2","values":[0.05,0.1]}]})";
  CHECK(cli(base + " --out " + q(dir / "b") + " --sweep " + q(dir / "sweep.json"), dir / "log") == 0);
  CHECK(read_json(dir / "b" / "sweep.json").at("runs").size() == 2);

  CHECK(cli(base + " --out " + q(dir / "c"), dir / "log") == 2);
  CHECK(cli(base + " --out " + q(dir / "c") + " --grid sigma1", dir / "log") == 2);
  CHECK(cli(base + " --out " + q(dir / "c") + " --listed --grid sigma1=0.1,0.2 --grid sigma2=0.1", dir / "log") == 2);
  CHECK(cli(base + " --out " + q(dir / "c") + " --jobs 0 --grid sigma1=0.1", dir / "log") == 2);
}
