#pragma once

#include "sfca/accessibility.hpp"
#include "sfca/demography.hpp"
#include "sfca/network.hpp"
#include "sfca/tabular.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sfca {

/// Polygon features with camp_id, pop_total, pop_female, pop_male.
/// MultiPolygons are rejected: one boundary per camp.
[[nodiscard]] std::vector<Camp> load_camps(const std::filesystem::path& path);

/// Override camp populations from a CSV keyed by camp_id
/// (pop_total, optional pop_female / pop_male). Unknown ids are errors.
void apply_population_csv(std::vector<Camp>& camps, const std::filesystem::path& path);

/// Point features with facility_id, kind, gender (optional) and count.
[[nodiscard]] std::vector<Facility> load_facilities(const std::filesystem::path& path);

/// LineString / MultiLineString features.
[[nodiscard]] std::vector<Polyline> load_footpaths(const std::filesystem::path& path);

/// Polygon / MultiPolygon features, geometry only.
[[nodiscard]] std::vector<Polygon> load_polygons(const std::filesystem::path& path);

/// Polygon features with a block_id property.
[[nodiscard]] std::vector<Block> load_blocks(const std::filesystem::path& path);

/// Cell squares carrying the field CSV columns as properties.
[[nodiscard]] std::string field_geojson(const AccessField& field, const PopulationField& population, double cell_size);
[[nodiscard]] std::string change_geojson(const FieldChange& change, double cell_size);
[[nodiscard]] FieldTable read_field_geojson(const std::filesystem::path& path);

}  // namespace sfca
