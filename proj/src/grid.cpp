#include "sfca/grid.hpp"

#include <cmath>

namespace sfca {

Grid build_grid(const Polygon& aoi, double cell_size) {
  return build_grid(std::span<const Polygon>(&aoi, 1), cell_size);
}

Grid build_grid(std::span<const Polygon> aois, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw Error("build_grid: cell_size must be > 0");
  if (aois.empty()) throw Error("build_grid: no area of interest");
  BBox2 box;
  for (const auto& a : aois) {
    if (a.empty() || !(a.area() > 0.0)) throw Error("build_grid: degenerate area of interest");
    box.extend(a.bbox());
  }

  const auto col0 = static_cast<std::int64_t>(std::floor(box.min.x() / cell_size));
  const auto row0 = static_cast<std::int64_t>(std::floor(box.min.y() / cell_size));
  const auto col1 = static_cast<std::int64_t>(std::ceil(box.max.x() / cell_size));
  const auto row1 = static_cast<std::int64_t>(std::ceil(box.max.y() / cell_size));

  Grid grid;
  grid.spec.origin = Point(static_cast<double>(col0) * cell_size, static_cast<double>(row0) * cell_size);
  grid.spec.cell_size = cell_size;
  grid.spec.n_cols = std::max<std::int64_t>(1, col1 - col0);
  grid.spec.n_rows = std::max<std::int64_t>(1, row1 - row0);

  for (std::int64_t r = 0; r < grid.spec.n_rows; ++r) {
    for (std::int64_t c = 0; c < grid.spec.n_cols; ++c) {
      const Polygon square = grid.spec.cell_polygon(r, c);
      bool hit = false;
      for (const auto& a : aois) {
        if (!a.bbox().intersects(square.bbox())) continue;
        if (intersection_area(a, square) > 0.0) {
          hit = true;
          break;
        }
      }
      if (hit) grid.cells.push_back({r, c, grid.spec.cell_id(r, c), grid.spec.centroid(r, c)});
    }
  }
  return grid;
}

}  // namespace sfca
