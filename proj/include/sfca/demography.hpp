#pragma once

#include "sfca/geometry.hpp"
#include "sfca/grid.hpp"

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace sfca {

struct Camp {
  std::string camp_id;
  Polygon boundary;
  double pop_total = 0.0;
  double pop_female = 0.0;
  double pop_male = 0.0;
};

using ShelterSet = std::vector<Polygon>;

/// Pre-rasterized shelter area: square meters of shelter inside (cell, camp).
struct ShelterAreaEntry {
  std::size_t cell_index = 0;  // index into Grid::cells
  std::size_t camp_index = 0;  // index into the camp list
  double area = 0.0;
};

/// People per square meter of shelter, per gender stream.
struct CampDensity {
  double total = 0.0;
  double female = 0.0;
  double male = 0.0;
};

/// Per-cell population aligned with Grid::cells.
struct PopulationField {
  Eigen::VectorXd total;
  Eigen::VectorXd female;
  Eigen::VectorXd male;

  [[nodiscard]] Eigen::Index size() const { return total.size(); }
};

struct Allocation {
  PopulationField population;
  Eigen::VectorXd shelter_area;              // per cell, clipped to camps
  std::vector<std::string> camps_skipped;    // camps with no shelter area
};

/// Camp population divided by the shelter area inside the camp boundary.
/// Throws when that area is zero.
[[nodiscard]] CampDensity density_per_camp(const Camp& camp, const ShelterSet& shelters);

/// Density from an already-measured shelter area.
[[nodiscard]] CampDensity density_from_area(const Camp& camp, double shelter_area);

/// Apportion camp populations to grid cells by the shelter area inside each
/// (cell, camp) piece. Shelters spanning several camps are split
/// geometrically; shelter area outside every camp is ignored.
[[nodiscard]] Allocation allocate_population(const Grid& grid, std::span<const Camp> camps,
                                             const ShelterSet& shelters);

/// Same apportionment from a pre-rasterized area table.
[[nodiscard]] Allocation allocate_population(const Grid& grid, std::span<const Camp> camps,
                                             std::span<const ShelterAreaEntry> areas);

/// Living space per person per epoch. Throws on a non-positive population.
[[nodiscard]] std::map<std::string, double> living_space_series(
    const std::map<std::string, double>& area_by_epoch,
    const std::map<std::string, double>& pop_by_epoch);

}  // namespace sfca
