#include <doctest.h>

#include "prefalign/error.hpp"
#include "prefalign/layout.hpp"
#include "support.hpp"

using namespace prefalign;
using layout::Region;

namespace {

Region random_region(SeededRng& rng, double min_side = 0.0) {
  for (;;) {
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
    const Region r{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    if (r.x_right - r.x_left > std::max(min_side, 1e-9) && r.y_bottom - r.y_top > std::max(min_side, 1e-9)) return r;
  }
}

std::vector<int> as_ints(const layout::BinaryGrid& g) { return {g.cells.begin(), g.cells.end()}; }

bool snapped(const Region& r, int h, int w) {
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const double x = (col + 0.5) / w, y = (row + 0.5) / h;
      if (x >= r.x_left && x < r.x_right && y >= r.y_top && y < r.y_bottom) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("validate_and_normalize clamps and rejects degenerate boxes") {
  CHECK(layout::validate_and_normalize({-0.2, 0.1, 0.5, 1.3}) == Region{0.0, 0.1, 0.5, 1.0});
  CHECK_THROWS_AS(layout::validate_and_normalize({0.5, 0.5, 0.5, 0.9}), Error);
  CHECK_THROWS_AS(layout::validate_and_normalize({0.9, 0.0, 0.1, 1.0}), Error);
  CHECK_THROWS_AS(layout::validate_and_normalize({1.2, 0.0, 1.5, 1.0}), Error);
  CHECK_THROWS_AS(layout::validate_and_normalize({0.0, std::nan(""), 0.5, 1.0}), Error);
  try {
    layout::validate_and_normalize({0.9, 0.0, 0.1, 1.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateRegion);
  }
}

TEST_CASE("clamping is idempotent") {
  SeededRng rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::array<double, 4> raw = {rng.uniform() * 1.6 - 0.3, rng.uniform() * 1.6 - 0.3,
                                       rng.uniform() * 1.6 - 0.3, rng.uniform() * 1.6 - 0.3};
    try {
      const Region once = layout::validate_and_normalize(raw);
      CHECK(layout::validate_and_normalize(once.as_array()) == once);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDegenerateRegion);
    }
  }
}

TEST_CASE("order_plan examples") {
  const auto order = [](const std::vector<Region>& regions) {
    std::vector<std::string> prompts(regions.size(), "p");
    std::vector<std::size_t> out;
    for (const auto& e : layout::order_plan(regions, prompts).entries) out.push_back(e.entity_index);
    return out;
  };
  CHECK(order({{0, 0, 0.5, 0.5}, {0, 0, 1, 1}}) == std::vector<std::size_t>{1, 0});
  CHECK(order({{0, 0, 0.5, 0.5}, {0.5, 0.5, 1, 1}}) == std::vector<std::size_t>{0, 1});
  CHECK(order({{0, 0, 0.5, 1}, {0, 0, 0.9, 1}, {0, 0, 0.1, 1}}) == std::vector<std::size_t>{1, 0, 2});
  CHECK_THROWS_AS(layout::order_plan({{0, 0, 1, 1}}, {}), Error);
}

TEST_CASE("order_plan agrees with the sort oracle on random plans") {
  SeededRng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    std::vector<Region> regions;
    std::vector<oracle::Box> boxes;
    for (int i = 0; i < n; ++i) {
      // Quantized corners make equal areas common.
      const auto q = [&] { return std::floor(rng.uniform() * 4) / 4; };
      double l = q(), t = q();
      Region r{l, t, l + 0.25 * (1 + std::floor(rng.uniform() * (4 - l * 4))),
               t + 0.25 * (1 + std::floor(rng.uniform() * (4 - t * 4)))};
      r.x_right = std::min(r.x_right, 1.0);
      r.y_bottom = std::min(r.y_bottom, 1.0);
      regions.push_back(r);
      boxes.push_back(r.as_array());
    }
    const auto plan = layout::order_plan(regions, std::vector<std::string>(regions.size(), "p"));
    const auto expected = oracle::plan_order(boxes);
    REQUIRE(plan.entries.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(plan.entries[i].entity_index == static_cast<std::size_t>(expected[i]));
    }
  }
}

TEST_CASE("rasterize examples") {
  CHECK(layout::rasterize_mask({0, 0, 1, 1}, 4, 4).grid.count() == 16);
  const auto left = layout::rasterize_mask({0, 0, 0.5, 1}, 4, 4).grid;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(left.at(r, c) == (c < 2 ? 1 : 0));
  }
  const auto tiny = layout::rasterize_mask({0.0, 0.0, 0.1, 0.1}, 2, 2).grid;
  CHECK(tiny.count() == 1);
  CHECK(tiny.at(0, 0) == 1);
}

TEST_CASE("rasterize agrees with the cell-center oracle") {
  SeededRng rng(5);
  int snaps = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform() * 16);
    const int w = 1 + static_cast<int>(rng.uniform() * 16);
    Region r = random_region(rng);
    if (trial % 4 == 0) {  // force small boxes so snapping is exercised
      const double cx = rng.uniform() * 0.95, cy = rng.uniform() * 0.95;
      r = {cx, cy, cx + 0.02, cy + 0.03};
    }
    snaps += snapped(r, h, w) ? 1 : 0;
    CHECK(as_ints(layout::rasterize_mask(r, h, w).grid) == oracle::cells_in(r.as_array(), h, w));
  }
  CHECK(snaps > 10);
}

TEST_CASE("background mask is the complement of the union") {
  CHECK(layout::background_mask({}, 4, 4).count() == 16);
  CHECK(layout::background_mask({layout::rasterize_mask({0, 0, 1, 1}, 4, 4)}, 4, 4).count() == 0);
  const auto bg = layout::background_mask({layout::rasterize_mask({0, 0, 0.5, 1}, 4, 4)}, 4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(bg.at(r, c) == (c >= 2 ? 1 : 0));
  }
  CHECK_THROWS_AS(layout::background_mask({layout::rasterize_mask({0, 0, 1, 1}, 4, 4)}, 8, 8), Error);
}

TEST_CASE("enlarging a region never unsets a cell") {
  SeededRng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = 2 + static_cast<int>(rng.uniform() * 12);
    const int w = 2 + static_cast<int>(rng.uniform() * 12);
    const Region small = random_region(rng);
    if (snapped(small, h, w)) continue;
    const Region big{small.x_left * rng.uniform(), small.y_top * rng.uniform(),
                     small.x_right + (1 - small.x_right) * rng.uniform(),
                     small.y_bottom + (1 - small.y_bottom) * rng.uniform()};
    const auto a = layout::rasterize_mask(small, h, w).grid;
    const auto b = layout::rasterize_mask(big, h, w).grid;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
      if (a.cells[i]) CHECK(b.cells[i] == 1);
    }
  }
}

TEST_CASE("pooled finer raster covers the coarse raster") {
  SeededRng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = 2 + static_cast<int>(rng.uniform() * 10);
    const int w = 2 + static_cast<int>(rng.uniform() * 10);
    const Region r = random_region(rng);
    if (r.x_right - r.x_left < 0.5 / w || r.y_bottom - r.y_top < 0.5 / h) continue;
    const auto coarse = layout::rasterize_mask(r, h, w).grid;
    const auto fine = layout::rasterize_mask(r, 2 * h, 2 * w).grid;
    for (int row = 0; row < h; ++row) {
      for (int col = 0; col < w; ++col) {
        if (!coarse.at(row, col)) continue;
        const int pooled = fine.at(2 * row, 2 * col) | fine.at(2 * row + 1, 2 * col) |
                           fine.at(2 * row, 2 * col + 1) | fine.at(2 * row + 1, 2 * col + 1);
        CHECK(pooled == 1);
      }
    }
  }
}

TEST_CASE("plan order is a permutation") {
  SeededRng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Region> regions;
    for (int i = 0; i < 6; ++i) regions.push_back(random_region(rng));
    const auto plan = layout::order_plan(regions, std::vector<std::string>(6, "p"));
    std::vector<int> seen(6, 0);
    for (const auto& e : plan.entries) ++seen[e.entity_index];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    CHECK(layout::reorder(plan.entries) == plan);
  }
}
