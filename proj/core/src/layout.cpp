#include "prefalign/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prefalign/error.hpp"

namespace prefalign::layout {

Region validate_and_normalize(const std::array<double, 4>& raw) {
  for (double v : raw) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "box coordinate is not finite");
  }
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const Region r{clamp01(raw[0]), clamp01(raw[1]), clamp01(raw[2]), clamp01(raw[3])};
  if (!(r.x_left < r.x_right)) {
    fail(ErrorCode::kDegenerateRegion, r.x_left == r.x_right ? "box has zero width" : "box is inverted horizontally");
  }
  if (!(r.y_top < r.y_bottom)) {
    fail(ErrorCode::kDegenerateRegion, r.y_top == r.y_bottom ? "box has zero height" : "box is inverted vertically");
  }
  return r;
}

const LayoutEntry* LayoutPlan::find(std::size_t entity_index) const {
  for (const auto& e : entries) {
    if (e.entity_index == entity_index) return &e;
  }
  return nullptr;
}

LayoutPlan reorder(std::vector<LayoutEntry> entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const LayoutEntry& a, const LayoutEntry& b) {
    const double area_a = a.region.area();
    const double area_b = b.region.area();
    if (area_a != area_b) return area_a > area_b;
    return a.entity_index < b.entity_index;
  });
  return LayoutPlan{std::move(entries)};
}

LayoutPlan order_plan(const std::vector<Region>& regions,
                      const std::vector<std::string>& sub_prompts) {
  if (regions.size() != sub_prompts.size()) {
    fail(ErrorCode::kLengthMismatch, std::to_string(regions.size()) + " regions for " +
                                         std::to_string(sub_prompts.size()) + " sub-prompts");
  }
  std::vector<LayoutEntry> entries;
  entries.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    entries.push_back({i, regions[i], sub_prompts[i]});
  }
  return reorder(std::move(entries));
}

std::size_t BinaryGrid::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

RegionMask rasterize_mask(const Region& region, int height, int width) {
  if (height < 1 || width < 1) fail(ErrorCode::kInvalidArgument, "mask dimensions must be >= 1");
  RegionMask mask{BinaryGrid(height, width), region};
  bool any = false;
  for (int r = 0; r < height; ++r) {
    const double cy = (r + 0.5) / height;
    if (cy < region.y_top || cy >= region.y_bottom) continue;
    for (int c = 0; c < width; ++c) {
      const double cx = (c + 0.5) / width;
      if (cx >= region.x_left && cx < region.x_right) {
        mask.grid.set(r, c, 1);
        any = true;
      }
    }
  }
  if (!any) {
    const double bx = 0.5 * (region.x_left + region.x_right);
    const double by = 0.5 * (region.y_top + region.y_bottom);
    double best = std::numeric_limits<double>::infinity();
    int best_r = 0;
    int best_c = 0;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double dx = (c + 0.5) / width - bx;
        const double dy = (r + 0.5) / height - by;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          best_r = r;
          best_c = c;
        }
      }
    }
    mask.grid.set(best_r, best_c, 1);
  }
  return mask;
}

BinaryGrid background_mask(const std::vector<RegionMask>& masks, int height, int width) {
  BinaryGrid out(height, width, 1);
  for (const auto& m : masks) {
    if (m.grid.height != height || m.grid.width != width) {
      fail(ErrorCode::kShapeMismatch, "mask shape differs from background grid");
    }
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
      if (m.grid.cells[i]) out.cells[i] = 0;
    }
  }
  return out;
}

}  // namespace prefalign::layout
