#pragma once

#include "sfca/accessibility.hpp"
#include "sfca/demography.hpp"
#include "sfca/grid.hpp"
#include "sfca/network.hpp"
#include "sfca/tabular.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sfca {

enum class DistanceMode { kNetwork, kEuclidean };

[[nodiscard]] std::string_view to_string(DistanceMode m);
[[nodiscard]] std::optional<DistanceMode> parse_distance_mode(std::string_view s);

struct RunConfig {
  double cell_size = 50.0;
  double d0 = 1609.0;
  double sigma = 402.0;
  // Per-kind overrides of d0 / sigma.
  std::array<std::optional<double>, kKindCount> d0_by_kind{};
  std::array<std::optional<double>, kKindCount> sigma_by_kind{};
  DistanceMode distance_mode = DistanceMode::kNetwork;
  ScenarioConfig scenario;
  std::array<bool, kKindCount> kinds{true, true, true};
  double snap_tolerance = 0.5;
  bool strict = false;           // every facility must lie inside a camp
  double strict_buffer = 0.0;    // meters of slack around camp boundaries

  std::filesystem::path camps;
  std::filesystem::path populations;    // optional CSV override
  std::filesystem::path facilities;
  std::filesystem::path footpaths;      // required in network mode
  std::filesystem::path shelters;       // GeoJSON polygons, or
  std::filesystem::path shelter_areas;  // CSV cell_id, camp_id, shelter_area
  std::filesystem::path blocks;         // optional
  std::filesystem::path out_dir;

  /// Throws on non-positive lengths or a missing required path.
  void validate() const;
  [[nodiscard]] KindSettings kind_settings() const;
};

/// Pre-measured shelter area keyed by ids rather than indices.
struct ShelterAreaRow {
  std::int64_t cell_id = 0;
  std::string camp_id;
  double area = 0.0;
};

struct Dataset {
  std::vector<Camp> camps;
  std::vector<Facility> facilities;
  std::vector<Polyline> footpaths;
  std::vector<Polygon> shelters;
  std::vector<ShelterAreaRow> shelter_areas;
  std::vector<Block> blocks;
  std::vector<std::string> log;       // one line per loaded layer
  std::vector<std::string> warnings;
};

[[nodiscard]] Dataset load_dataset(const RunConfig& cfg);

/// Referential checks that do not need files: strict facility placement
/// and the geographic-coordinate hint. Appends warnings.
void check_dataset(const RunConfig& cfg, Dataset& ds);

[[nodiscard]] Grid grid_for(const RunConfig& cfg, const Dataset& ds);

/// Apportion camp populations by whichever shelter layer the dataset has.
[[nodiscard]] Allocation allocate(const Grid& grid, const Dataset& ds);

/// Cells x facilities distances within the largest enabled d0.
struct DistanceStage {
  PairDistances distances;
  std::optional<NetworkBuild> network;
};

[[nodiscard]] DistanceStage compute_distances(const RunConfig& cfg, const Dataset& ds, const Grid& grid);

struct AccessRun {
  Grid grid;
  Allocation allocation;
  std::size_t network_vertices = 0;
  std::size_t network_edges = 0;
  std::size_t network_dropped_edges = 0;
  ScenarioResult result;
  std::vector<BlockSummary> blocks;
  std::vector<std::string> warnings;
};

/// Grid, allocation, distances and the scenario run. Writes field.csv,
/// field.geojson, summary.csv, diagnostics.txt and blocks.csv into
/// cfg.out_dir when it is set.
[[nodiscard]] AccessRun run_access(const RunConfig& cfg, const Dataset& ds);

/// People-per-facility table over all cells with both reducers.
[[nodiscard]] std::string summary_csv(const AccessField& field, const PopulationField& population);
[[nodiscard]] std::string diagnostics_text(const AccessRun& run);

struct CompareRun {
  FieldChange change;
  std::vector<BlockSummary> blocks;
};

/// Per-cell and per-block change b - a. Writes change.csv, change.geojson
/// and (with blocks) block_change.csv into out_dir when set.
[[nodiscard]] CompareRun run_compare(const FieldTable& a, const FieldTable& b, std::span<const Block> blocks,
                                     const std::filesystem::path& out_dir = {}, double cell_size = 50.0);

struct ValidateRun {
  std::vector<std::string> camp_ids;
  Eigen::VectorXd access;  // camp-level mean accessibility
  Eigen::VectorXd survey;  // surveyed people per facility
  double rho = 0.0;
};

/// Spearman between camp-mean accessibility (cells by centroid in camp)
/// and the surveyed people per facility. `kind` empty uses A_mean.
[[nodiscard]] ValidateRun run_validate(const FieldTable& field, std::span<const Camp> camps, const CsvTable& survey,
                                       std::optional<FacilityKind> kind, Reducer reducer);

[[nodiscard]] std::string scatter_csv(const ValidateRun& v);

/// Loads a field from .csv or .geojson by extension.
[[nodiscard]] FieldTable read_field(const std::filesystem::path& path);

}  // namespace sfca
