#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace prefalign::layout {

// Normalized box, top-left origin. Invariant: 0 <= left < right <= 1 and
// 0 <= top < bottom <= 1.
struct Region {
  double x_left = 0.0;
  double y_top = 0.0;
  double x_right = 1.0;
  double y_bottom = 1.0;

  double area() const { return (x_right - x_left) * (y_bottom - y_top); }
  std::array<double, 4> as_array() const { return {x_left, y_top, x_right, y_bottom}; }
  bool operator==(const Region&) const = default;
};

// Clamps each coordinate into [0, 1]. Throws kDegenerateRegion when the
// clamped box is inverted or has zero area, kInvalidArgument on non-finite
// input.
Region validate_and_normalize(const std::array<double, 4>& raw);

struct LayoutEntry {
  std::size_t entity_index = 0;
  Region region;
  std::string located_sub_prompt;

  bool operator==(const LayoutEntry&) const = default;
};

// Entries sorted by region area, largest first; equal areas keep ascending
// entity_index.
struct LayoutPlan {
  std::vector<LayoutEntry> entries;

  const LayoutEntry* find(std::size_t entity_index) const;
  bool operator==(const LayoutPlan&) const = default;
};

// regions[i] and sub_prompts[i] belong to entity i. Throws kLengthMismatch.
LayoutPlan order_plan(const std::vector<Region>& regions,
                      const std::vector<std::string>& sub_prompts);

// Re-sorts existing entries under the plan ordering rule.
LayoutPlan reorder(std::vector<LayoutEntry> entries);

struct BinaryGrid {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;  // raster order, 0 or 1

  BinaryGrid() = default;
  BinaryGrid(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), cells(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t at(int row, int col) const { return cells[static_cast<std::size_t>(row) * width + col]; }
  void set(int row, int col, std::uint8_t v) { cells[static_cast<std::size_t>(row) * width + col] = v; }
  std::size_t count() const;
  bool operator==(const BinaryGrid&) const = default;
};

struct RegionMask {
  BinaryGrid grid;
  Region source;
};

// Cell (r, c) is set iff its center ((c+0.5)/w, (r+0.5)/h) lies in the
// half-open box [left, right) x [top, bottom). If no center qualifies, the
// single cell whose center is nearest the box center is set (ties go to the
// first cell in raster order).
RegionMask rasterize_mask(const Region& region, int height, int width);

// Complement of the union of all masks. Throws kShapeMismatch.
BinaryGrid background_mask(const std::vector<RegionMask>& masks, int height, int width);

}  // namespace prefalign::layout
