#pragma once

#include "sfca/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sfca {

/// Regular square grid. `origin` is the lower-left corner of cell (0, 0);
/// rows grow with y and columns with x.
struct GridSpec {
  Point origin{0.0, 0.0};
  double cell_size = 50.0;
  std::int64_t n_cols = 0;
  std::int64_t n_rows = 0;

  [[nodiscard]] Point cell_min(std::int64_t row, std::int64_t col) const {
    return origin + Point(static_cast<double>(col) * cell_size, static_cast<double>(row) * cell_size);
  }
  [[nodiscard]] Point centroid(std::int64_t row, std::int64_t col) const {
    return cell_min(row, col) + Point::Constant(0.5 * cell_size);
  }
  [[nodiscard]] Polygon cell_polygon(std::int64_t row, std::int64_t col) const {
    const Point lo = cell_min(row, col);
    return Polygon::rectangle(lo, lo + Point::Constant(cell_size));
  }
  [[nodiscard]] std::int64_t cell_id(std::int64_t row, std::int64_t col) const {
    return row * n_cols + col;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridCell {
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::int64_t cell_id = 0;
  Point centroid{0.0, 0.0};
};

struct Grid {
  GridSpec spec;
  std::vector<GridCell> cells;  // ordered by (row, col)

  [[nodiscard]] Polygon geometry(const GridCell& c) const { return spec.cell_polygon(c.row, c.col); }
};

/// Cells of `cell_size` whose squares overlap `aoi` with positive area.
/// The grid origin is snapped down to an integer multiple of `cell_size`.
[[nodiscard]] Grid build_grid(const Polygon& aoi, double cell_size);

/// Same over the union of several areas; a cell is kept when it overlaps any.
[[nodiscard]] Grid build_grid(std::span<const Polygon> aois, double cell_size);

}  // namespace sfca
