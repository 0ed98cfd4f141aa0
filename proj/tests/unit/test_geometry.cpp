#include <random>
#include <vector>

#include "doctest.h"
#include "dreaminsert/errors.hpp"
#include "dreaminsert/geometry.hpp"
#include "dreaminsert/trajectory_io.hpp"
#include "oracles.hpp"

using namespace dreaminsert;

namespace {

std::vector<BBox> boxes_of(const TrajectorySequence& t) { return t.boxes; }

}  // namespace

TEST_CASE("trajectory: empty schedule keeps the box still") {
  const auto t = generate_trajectory({10, 10, 8, 8}, {}, 3, {64, 64});
  CHECK(boxes_of(t) == std::vector<BBox>(3, BBox{10, 10, 8, 8}));
}

TEST_CASE("trajectory: linear motion") {
  const std::vector<BoxDelta> d{{2, 0, 0, 0}};
  const auto t = generate_trajectory({0, 0, 8, 8}, d, 3, {64, 64});
  CHECK(boxes_of(t) == std::vector<BBox>{{0, 0, 8, 8}, {2, 0, 8, 8}, {4, 0, 8, 8}});
}

TEST_CASE("trajectory: clamping at the right edge") {
  const std::vector<BoxDelta> d{{4, 0, 0, 0}};
  // A start box that already touches the edge stays there.
  auto t = generate_trajectory({56, 0, 8, 8}, d, 3, {64, 64});
  CHECK(boxes_of(t) == oracle::trajectory({56, 0, 8, 8}, d, 3, 64, 64));
  CHECK(t.boxes.back() == BBox{56, 0, 8, 8});
  // Partial step then pinned.
  t = generate_trajectory({54, 0, 8, 8}, d, 4, {64, 64});
  CHECK(boxes_of(t) == std::vector<BBox>{{54, 0, 8, 8}, {56, 0, 8, 8}, {56, 0, 8, 8}, {56, 0, 8, 8}});
}

TEST_CASE("trajectory: an initial box outside the frame is rejected") {
  CHECK_THROWS_AS(generate_trajectory({60, 0, 8, 8}, {}, 3, {64, 64}), ValidationError);
  CHECK_THROWS_AS(generate_trajectory({0, 0, 8, 8}, {}, 0, {64, 64}), ValidationError);
  CHECK_THROWS_AS(generate_trajectory({0, 0, 8, 8}, {}, 3, {0, 64}), ValidationError);
  CHECK_THROWS_AS(generate_trajectory({0, 0, 0, 8}, {}, 3, {64, 64}), ValidationError);
}

TEST_CASE("trajectory: random schedules match the scalar clamp oracle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> step(-9, 9), dims(1, 80), n(1, 12), len(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const int W = dims(rng), H = dims(rng);
    const BBox init = oracle::random_box(rng, W, H);
    std::vector<BoxDelta> d(static_cast<std::size_t>(len(rng)));
    for (auto& s : d) s = {step(rng), step(rng), step(rng), step(rng)};
    const int frames = n(rng);
    const auto t = generate_trajectory(init, d, frames, {W, H});
    REQUIRE(t.size() == static_cast<std::size_t>(frames));
    CHECK(boxes_of(t) == oracle::trajectory(init, d, frames, W, H));
    for (const auto& b : t.boxes) CHECK(b.fits({W, H}));
  }
}

TEST_CASE("rasterize: box examples") {
  const auto m = rasterize(BBox{0, 0, 2, 2}, {4, 4});
  CHECK(oracle::to_grid(m) == oracle::Grid{{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  CHECK(rasterize(BBox{0, 0, 5, 3}, {5, 3}).count() == 15);
  CHECK_THROWS_AS(rasterize(BBox{3, 3, 2, 2}, {4, 4}), ValidationError);
}

TEST_CASE("rasterize: random boxes match the pixel loop; enlarging never removes pixels") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int W = 1 + static_cast<int>(rng() % 48), H = 1 + static_cast<int>(rng() % 48);
    const BBox b = oracle::random_box(rng, W, H);
    const auto m = rasterize(b, {W, H});
    CHECK(oracle::to_grid(m) == oracle::box_grid(b, W, H));
    CHECK(m.count() == static_cast<std::size_t>(b.w * b.h));
    BBox bigger{std::max(0, b.x0 - 1), std::max(0, b.y0 - 1), 0, 0};
    bigger.w = std::min(W, b.x1() + 1) - bigger.x0;
    bigger.h = std::min(H, b.y1() + 1) - bigger.y0;
    CHECK(m.subset_of(rasterize(bigger, {W, H})));
  }
}

TEST_CASE("resize_nearest: random grids match the exact pixel-centre oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 30), h = 1 + static_cast<int>(rng() % 30);
    const auto src = oracle::random_mask(rng, w, h, 0.5);
    const int tw = 1 + static_cast<int>(rng() % 40), th = 1 + static_cast<int>(rng() % 40);
    CHECK(oracle::to_grid(resize_nearest(src, tw, th)) == oracle::nn_resize(oracle::to_grid(src), tw, th));
  }
  const auto m = oracle::random_mask(rng, 9, 7, 0.5);
  CHECK(resize_nearest(m, 9, 7) == m);
}

TEST_CASE("merge_mask: full object mask gives the box") {
  const auto obj = BinaryMask::filled(8, 8);
  CHECK(merge_mask(obj, {0, 0, 2, 2}, {4, 4}) == rasterize(BBox{0, 0, 2, 2}, {4, 4}));
}

TEST_CASE("merge_mask: half-support object keeps its shape in the box") {
  // Left-half block plus one marker pixel in the right column, so the tight
  // crop spans the full mask width.
  BinaryMask obj(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 4; ++x) obj.set(x, y);
  obj.set(7, 0);
  const auto merged = merge_mask(obj, {0, 0, 8, 8}, {16, 16});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(merged.at(x, y) == ((x < 4) || (x == 7 && y == 0) ? 1 : 0));
  CHECK(oracle::to_grid(merged) == oracle::merge(oracle::to_grid(obj), {0, 0, 8, 8}, 16, 16));
}

TEST_CASE("merge_mask: frame-sized mask whose support spans the frame is unchanged") {
  std::mt19937_64 rng(8);
  auto m = oracle::random_mask(rng, 12, 10, 0.4);
  m.set(0, 3);
  m.set(11, 4);
  m.set(5, 0);
  m.set(6, 9);
  CHECK(merge_mask(m, {0, 0, 12, 10}, {12, 10}) == m);
}

TEST_CASE("merge_mask: random masks and boxes match the oracle and stay in the box") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto obj = oracle::random_mask(rng, 1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 20), 0.3);
    const int W = 4 + static_cast<int>(rng() % 40), H = 4 + static_cast<int>(rng() % 40);
    const BBox b = oracle::random_box(rng, W, H);
    const auto merged = merge_mask(obj, b, {W, H});
    CHECK(oracle::to_grid(merged) == oracle::merge(oracle::to_grid(obj), b, W, H));
    CHECK(merged.subset_of(rasterize(b, {W, H})));
  }
  CHECK_THROWS_AS(merge_mask(BinaryMask(4, 4), {0, 0, 2, 2}, {4, 4}), ValidationError);
}

TEST_CASE("interaction and partition: examples") {
  const auto traj = rasterize(BBox{1, 1, 2, 2}, {4, 4});
  CHECK(interaction_mask(traj, traj).none());
  CHECK(interaction_mask(BinaryMask(4, 4), traj) == traj);

  const auto empty = partition(BinaryMask(4, 4), BinaryMask(4, 4));
  CHECK(empty.background == BinaryMask::filled(4, 4));
  const auto full = partition(BinaryMask::filled(4, 4), BinaryMask::filled(4, 4));
  CHECK(full.object == BinaryMask::filled(4, 4));
  CHECK(full.interaction.none());
  CHECK(full.background.none());

  BinaryMask outside(4, 4);
  outside.set(0, 0);
  CHECK_THROWS_AS(partition(outside, traj), ValidationError);
  CHECK_THROWS_AS(interaction_mask(BinaryMask(3, 4), traj), ValidationError);
}

TEST_CASE("mask algebra invariants over random pairs") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 250; ++trial) {
    const int W = 2 + static_cast<int>(rng() % 50), H = 2 + static_cast<int>(rng() % 50);
    const BBox b = oracle::random_box(rng, W, H);
    const auto obj = oracle::random_mask(rng, 1 + static_cast<int>(rng() % 16), 1 + static_cast<int>(rng() % 16), 0.5);
    const auto traj = rasterize(b, {W, H});
    const auto merged = merge_mask(obj, b, {W, H});
    const auto p = partition(merged, traj);
    const auto tg = oracle::to_grid(traj), mg = oracle::to_grid(merged);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        CHECK(p.background.at(x, y) + p.interaction.at(x, y) + p.object.at(x, y) == 1);
        CHECK(p.interaction.at(x, y) == (tg[y][x] ^ mg[y][x]));
        CHECK(p.background.at(x, y) == 1 - tg[y][x]);
      }
    }
    CHECK(p.trajectory() == traj);
  }
}

TEST_CASE("mask support") {
  BinaryMask m(10, 10);
  CHECK_THROWS_AS(m.support(), ValidationError);
  m.set(2, 3);
  m.set(6, 5);
  CHECK(m.support() == BBox{2, 3, 5, 3});
}

TEST_CASE("trajectory json: generated and explicit forms") {
  const nlohmann::json spec = {{"init", {{"x0", 0}, {"y0", 0}, {"w", 8}, {"h", 8}}},
                               {"deltas", {{{"dx", 2}, {"dy", 0}, {"dw", 0}, {"dh", 0}}}},
                               {"frames", 3},
                               {"width", 64},
                               {"height", 64}};
  const auto t = trajectory_from_json(spec);
  CHECK(boxes_of(t) == std::vector<BBox>{{0, 0, 8, 8}, {2, 0, 8, 8}, {4, 0, 8, 8}});
  const auto back = trajectory_from_json(trajectory_to_json(t));
  CHECK(boxes_of(back) == boxes_of(t));
  CHECK(back.frame == t.frame);

  auto bad = trajectory_to_json(t);
  bad["boxes"][1]["x0"] = 60;
  CHECK_THROWS_AS(trajectory_from_json(bad), ValidationError);
}
