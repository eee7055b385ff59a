#include <doctest.h>

#include <random>

#include "flashguard/error.hpp"
#include "flashguard/imaging.hpp"
#include "oracles/oracles.hpp"

using namespace flashguard;

namespace {

Frame with_tile(int w, int h, int n, int row, int col, Rgb base, Rgb tile) {
  std::vector<Rgb> px(static_cast<std::size_t>(w) * h, base);
  const auto rs = tile_span(h, n, row), cs = tile_span(w, n, col);
  for (int y = rs.begin; y < rs.end; ++y) {
    for (int x = cs.begin; x < cs.end; ++x) px[static_cast<std::size_t>(y) * w + x] = tile;
  }
  return Frame(w, h, std::move(px));
}

TargetMap map_of(int n, const std::vector<int>& cells) {
  TargetMap m;
  m.n = n;
  m.frame_width = n * 4;
  m.frame_height = n * 4;
  m.cells.assign(cells.begin(), cells.end());
  return m;
}

}  // namespace

TEST_CASE("tile spans cover the axis and the last tile takes the remainder") {
  CHECK(tile_span(10, 3, 0).begin == 0);
  CHECK(tile_span(10, 3, 0).end == 3);
  CHECK(tile_span(10, 3, 2).begin == 6);
  CHECK(tile_span(10, 3, 2).end == 10);
  for (int extent = 4; extent < 40; ++extent) {
    for (int n = 1; n <= 4 && n <= extent; ++n) {
      int covered = 0;
      for (int i = 0; i < n; ++i) {
        const auto s = tile_span(extent, n, i);
        CHECK(s.begin == covered);
        covered = s.end;
      }
      CHECK(covered == extent);
    }
  }
}

TEST_CASE("tile means match per-pixel accumulation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> dim(8, 50);
    const int n = 1 << std::uniform_int_distribution<int>(1, 3)(rng);
    const auto f = oracle::random_frame(rng, dim(rng), dim(rng));
    const auto grid = tile_average(f, n);
    const auto want = oracle::tile_means(f, n);
    REQUIRE(grid.means.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(grid.means[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("frames smaller than the grid are rejected") {
  const auto f = Frame::filled(10, 10, {0, 0, 0});
  CHECK_THROWS_AS(tile_average(f, 16), Error);
  try {
    tile_average(f, 16);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_too_small);
  }
}

TEST_CASE("a tile difference of exactly the threshold is not motion") {
  MotionConfig cfg;
  cfg.n = 4;
  const auto a = Frame::filled(32, 32, {100, 100, 100});
  const auto at = with_tile(32, 32, 4, 1, 2, {100, 100, 100}, {109, 109, 109});
  const auto above = with_tile(32, 32, 4, 1, 2, {100, 100, 100}, {110, 109, 109});
  CHECK(raw_target_map(a, at, cfg).area() == 0);
  const auto m = raw_target_map(a, above, cfg);
  CHECK(m.area() == 1);
  CHECK(m.at(1, 2));
}

TEST_CASE("identical frames give an empty map") {
  std::mt19937_64 rng(3);
  const auto f = oracle::random_frame(rng, 40, 30);
  MotionConfig cfg;
  cfg.n = 8;
  CHECK(target_map(f, f, cfg).area() == 0);
}

TEST_CASE("mismatched geometry is rejected") {
  MotionConfig cfg;
  cfg.n = 4;
  CHECK_THROWS_AS(raw_target_map(Frame::filled(16, 16, {}), Frame::filled(16, 20, {}), cfg), Error);
}

TEST_CASE("morphology: closing fills a pinhole, opening drops an isolated cell") {
  // 5x5 block with a hole in the middle.
  std::vector<int> cells(36, 0);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) cells[r * 6 + c] = 1;
  }
  cells[2 * 6 + 2] = 0;
  const auto cleaned = morph_clean(map_of(6, cells), 1);
  CHECK(cleaned.at(2, 2));

  std::vector<int> lone(36, 0);
  lone[3 * 6 + 3] = 1;
  CHECK(morph_clean(map_of(6, lone), 1).area() == 0);
}

TEST_CASE("morph_clean is idempotent and erosion/dilation are dual") {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution bit(0.45);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 9;
    std::vector<int> cells(static_cast<std::size_t>(n) * n);
    for (auto& c : cells) c = bit(rng);
    const auto m = map_of(n, cells);
    const auto once = morph_clean(m, 1);
    CHECK(morph_clean(once, 1).cells == once.cells);

    // erode(m) = not dilate(not m) with complementary border conventions.
    auto inverted = m;
    for (auto& c : inverted.cells) c = 1 - c;
    auto dual = dilate(inverted, 1);
    for (auto& c : dual.cells) c = 1 - c;
    CHECK(erode(m, 1).cells == dual.cells);
    // Dilation is extensive, erosion anti-extensive.
    const auto d = dilate(m, 1), e = erode(m, 1);
    for (std::size_t i = 0; i < m.cells.size(); ++i) {
      CHECK(d.cells[i] >= m.cells[i]);
      CHECK(e.cells[i] <= m.cells[i]);
    }
  }
}

TEST_CASE("best map: smallest above the minimum area, else the largest") {
  MotionConfig cfg;
  cfg.n = 4;  // minimum area 1.6 cells
  auto area = [](int k) {
    std::vector<int> cells(16, 0);
    for (int i = 0; i < k; ++i) cells[i] = 1;
    return map_of(4, cells);
  };
  std::vector<TargetMap> maps{area(5), area(2), area(9)};
  CHECK(select_best_target_map_index(maps, cfg) == 1);
  maps = {area(1), area(0), area(1)};
  CHECK(select_best_target_map_index(maps, cfg) == 0);
  maps = {area(3), area(3)};
  CHECK(select_best_target_map_index(maps, cfg) == 0);
  CHECK_THROWS_AS(select_best_target_map_index(std::vector<TargetMap>{}, cfg), Error);
}

TEST_CASE("region pixels include the remainder strip of edge tiles") {
  MotionConfig cfg;
  cfg.n = 4;
  const auto a = Frame::filled(18, 18, {0, 0, 0});
  const auto b = with_tile(18, 18, 4, 3, 3, {0, 0, 0}, {200, 200, 200});
  const auto m = raw_target_map(a, b, cfg);
  CHECK(m.area() == 1);
  CHECK(m.region_pixels() == 6u * 6u);
}

TEST_CASE("darkness threshold is strict and needs every frame dark") {
  // Grey level g has luminance g * 1000 in thousandths.
  CHECK(is_dark(Frame::filled(8, 8, {25, 25, 25})));
  CHECK_FALSE(is_dark(Frame::filled(8, 8, {26, 26, 26})));
  FrameSequence seq{"u", {Frame::filled(8, 8, {5, 5, 5}), Frame::filled(8, 8, {5, 5, 5})}, {}, 10.0};
  CHECK(is_dark_sequence(seq));
  seq.frames[1] = Frame::filled(8, 8, {90, 90, 90});
  CHECK_FALSE(is_dark_sequence(seq));
}

TEST_CASE("motion config validation") {
  MotionConfig cfg;
  cfg.n = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.ta_min_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
