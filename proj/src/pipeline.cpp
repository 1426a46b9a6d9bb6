#include "sfca/pipeline.hpp"

#include "sfca/geojson.hpp"
#include "sfca/parallel.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace sfca {

std::string_view to_string(DistanceMode m) { return m == DistanceMode::kNetwork ? "network" : "euclidean"; }

std::optional<DistanceMode> parse_distance_mode(std::string_view s) {
  if (s == "network") return DistanceMode::kNetwork;
  if (s == "euclidean") return DistanceMode::kEuclidean;
  return std::nullopt;
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(name) + " must be > 0");
  };
  positive(cell_size, "cell_size");
  positive(d0, "d0");
  positive(sigma, "sigma");
  for (int k = 0; k < kKindCount; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (d0_by_kind[idx]) positive(*d0_by_kind[idx], "per-kind d0");
    if (sigma_by_kind[idx]) positive(*sigma_by_kind[idx], "per-kind sigma");
  }
  if (!(snap_tolerance >= 0.0)) throw Error("snap_tolerance must be >= 0");
  if (!(strict_buffer >= 0.0)) throw Error("strict_buffer must be >= 0");
  if (!(scenario.allgender_factor > 0.0 && scenario.allgender_factor <= 1.0))
    throw Error("allgender_factor must lie in (0, 1]");
  if (camps.empty()) throw Error("a camps file is required");
  if (facilities.empty()) throw Error("a facilities file is required");
  if (shelters.empty() == shelter_areas.empty()) throw Error("exactly one of shelters or shelter_areas is required");
  if (distance_mode == DistanceMode::kNetwork && footpaths.empty())
    throw Error("network distance mode requires a footpaths file");
}

KindSettings RunConfig::kind_settings() const {
  KindSettings s;
  for (int k = 0; k < kKindCount; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    s.kernel[idx].d0 = d0_by_kind[idx].value_or(d0);
    s.kernel[idx].sigma = sigma_by_kind[idx].value_or(sigma);
    s.enabled[idx] = kinds[idx];
  }
  return s;
}

namespace {

std::vector<ShelterAreaRow> load_shelter_areas(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cell = t.column("cell_id");
  const std::size_t camp = t.column("camp_id");
  const std::size_t area = t.column("shelter_area");
  std::vector<ShelterAreaRow> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double id = t.number(r, cell);
    if (id != std::floor(id) || id < 0) throw Error(path.string() + ": line " + std::to_string(r + 2) + ": bad cell_id");
    const double a = t.number(r, area);
    if (!(a >= 0.0) || !std::isfinite(a))
      throw Error(path.string() + ": line " + std::to_string(r + 2) + ": shelter_area must be >= 0");
    out.push_back({static_cast<std::int64_t>(id), t.rows[r][camp], a});
  }
  return out;
}

double distance_to_boundary(const Point& p, const Polygon& poly) {
  double best = kUnreachable;
  poly.for_each_edge([&](const Point& a, const Point& b) {
    const double t = project_to_segment(p, a, b);
    best = std::min(best, euclidean(p, a + t * (b - a)));
  });
  return best;
}

}  // namespace

void check_dataset(const RunConfig& cfg, Dataset& ds) {
  BBox2 box;
  for (const auto& c : ds.camps)
    for (const auto& p : c.boundary.exterior()) box.extend(p);
  for (const auto& f : ds.facilities) box.extend(f.location);
  if (!box.empty() && box.min.x() >= -180.0 && box.max.x() <= 180.0 && box.min.y() >= -90.0 && box.max.y() <= 90.0)
    ds.warnings.push_back("coordinates look geographic (degrees); distances and areas assume a metric projection");

  if (ds.facilities.empty()) ds.warnings.push_back("facility layer is empty; accessibility will be zero everywhere");

  if (cfg.strict) {
    for (const auto& f : ds.facilities) {
      const bool inside = std::any_of(ds.camps.begin(), ds.camps.end(), [&](const Camp& c) {
        return c.boundary.contains(f.location) ||
               (cfg.strict_buffer > 0.0 && distance_to_boundary(f.location, c.boundary) <= cfg.strict_buffer);
      });
      if (!inside) throw Error("facility '" + f.facility_id + "' lies outside every camp (strict mode)");
    }
  }
}

Dataset load_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.camps = load_camps(cfg.camps);
  if (ds.camps.empty()) throw Error(cfg.camps.string() + ": no camps");
  if (!cfg.populations.empty()) apply_population_csv(ds.camps, cfg.populations);
  ds.log.push_back("camps: " + std::to_string(ds.camps.size()));

  ds.facilities = load_facilities(cfg.facilities);
  std::array<std::size_t, kKindCount> per_kind{};
  for (const auto& f : ds.facilities) ++per_kind[static_cast<std::size_t>(f.kind)];
  std::string line = "facilities: " + std::to_string(ds.facilities.size());
  for (FacilityKind k : kAllKinds)
    line += " " + std::string(to_string(k)) + "=" + std::to_string(per_kind[static_cast<std::size_t>(k)]);
  ds.log.push_back(line);

  if (!cfg.footpaths.empty()) {
    ds.footpaths = load_footpaths(cfg.footpaths);
    ds.log.push_back("footpaths: " + std::to_string(ds.footpaths.size()) + " lines");
  }
  if (!cfg.shelters.empty()) {
    ds.shelters = load_polygons(cfg.shelters);
    ds.log.push_back("shelters: " + std::to_string(ds.shelters.size()) + " polygons");
  } else {
    ds.shelter_areas = load_shelter_areas(cfg.shelter_areas);
    ds.log.push_back("shelter areas: " + std::to_string(ds.shelter_areas.size()) + " rows");
  }
  if (!cfg.blocks.empty()) {
    ds.blocks = load_blocks(cfg.blocks);
    ds.log.push_back("blocks: " + std::to_string(ds.blocks.size()));
  }
  check_dataset(cfg, ds);
  return ds;
}

Grid grid_for(const RunConfig& cfg, const Dataset& ds) {
  if (ds.camps.empty()) throw Error("no camps to grid");
  std::vector<Polygon> aois;
  aois.reserve(ds.camps.size());
  for (const auto& c : ds.camps) aois.push_back(c.boundary);
  return build_grid(aois, cfg.cell_size);
}

Allocation allocate(const Grid& grid, const Dataset& ds) {
  if (!ds.shelters.empty() || ds.shelter_areas.empty()) return allocate_population(grid, ds.camps, ds.shelters);
  std::unordered_map<std::int64_t, std::size_t> cell_index;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) cell_index.emplace(grid.cells[i].cell_id, i);
  std::map<std::string, std::size_t> camp_index;
  for (std::size_t c = 0; c < ds.camps.size(); ++c) camp_index.emplace(ds.camps[c].camp_id, c);
  std::vector<ShelterAreaEntry> entries;
  entries.reserve(ds.shelter_areas.size());
  for (const auto& row : ds.shelter_areas) {
    auto ci = cell_index.find(row.cell_id);
    if (ci == cell_index.end()) throw Error("shelter area row references cell " + std::to_string(row.cell_id) + " outside the grid");
    auto ki = camp_index.find(row.camp_id);
    if (ki == camp_index.end()) throw Error("shelter area row references unknown camp '" + row.camp_id + "'");
    entries.push_back({ci->second, ki->second, row.area});
  }
  return allocate_population(grid, ds.camps, entries);
}

DistanceStage compute_distances(const RunConfig& cfg, const Dataset& ds, const Grid& grid) {
  DistanceStage out;
  const KindSettings kinds = cfg.kind_settings();
  const auto n_cells = static_cast<std::int64_t>(grid.cells.size());
  const auto n_fac = static_cast<std::int64_t>(ds.facilities.size());
  const double cutoff = kinds.max_d0();
  std::vector<Point> demand(grid.cells.size());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) demand[i] = grid.cells[i].centroid;
  std::vector<Point> supply(ds.facilities.size());
  for (std::size_t j = 0; j < ds.facilities.size(); ++j) supply[j] = ds.facilities[j].location;

  if (cfg.distance_mode == DistanceMode::kNetwork) out.network = build_network(ds.footpaths, cfg.snap_tolerance);
  if (n_fac == 0 || cutoff <= 0.0) {
    out.distances = PairDistances(n_cells, n_fac);
    return out;
  }
  if (cfg.distance_mode == DistanceMode::kEuclidean) {
    out.distances = euclidean_pair_distances(demand, supply, cutoff);
    return out;
  }
  const PedestrianNetwork& net = out.network->network;
  std::vector<SnapResult> demand_snaps(demand.size());
  std::vector<SnapResult> supply_snaps(supply.size());
  parallel_for(demand.size(), [&](std::size_t i) { demand_snaps[i] = net.snap(demand[i]); });
  parallel_for(supply.size(), [&](std::size_t j) { supply_snaps[j] = net.snap(supply[j]); });
  out.distances = network_pair_distances(net, demand, demand_snaps, supply, supply_snaps, cutoff);
  return out;
}

namespace {

const Eigen::VectorXd& stream_population(const PopulationField& pop, GenderStream s) {
  switch (s) {
    case GenderStream::kFemale: return pop.female;
    case GenderStream::kMale: return pop.male;
    case GenderStream::kTotal: break;
  }
  return pop.total;
}

}  // namespace

std::string summary_csv(const AccessField& field, const PopulationField& population) {
  const GenderStream stream = parse_stream(field.scenario).value_or(GenderStream::kTotal);
  const Eigen::VectorXd& weights = stream_population(population, stream);
  std::vector<std::size_t> all(field.cells.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::ostringstream out;
  write_csv_row(out, {"kind", "A_cell_mean", "A_pop_weighted", "people_per_facility_cell_mean",
                      "people_per_facility_pop_weighted"});
  auto row = [&](const std::string& name, const Eigen::VectorXd& v) {
    const auto cm = reduce(v, all, Reducer::kCellMean, weights);
    const auto pw = reduce(v, all, Reducer::kPopulationWeighted, weights);
    auto cell = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string(); };
    auto ppf = [](const std::optional<double>& x) { return x ? format_number(people_per_facility(*x)) : std::string(); };
    write_csv_row(out, {name, cell(cm), cell(pw), ppf(cm), ppf(pw)});
  };
  for (FacilityKind k : kAllKinds) {
    if (!field.enabled[static_cast<std::size_t>(k)]) continue;
    row(std::string(to_string(k)), field.values(k));
  }
  row("mean", field.mean);
  return out.str();
}

std::string diagnostics_text(const AccessRun& run) {
  std::ostringstream out;
  out << "scenario: " << run.result.field.scenario << '\n';
  out << "cells: " << run.grid.cells.size() << '\n';
  out << "facilities_used: " << run.result.facilities_used << '\n';
  if (run.network_edges > 0) {
    out << "network_vertices: " << run.network_vertices << '\n';
    out << "network_edges: " << run.network_edges << '\n';
    out << "network_dropped_edges: " << run.network_dropped_edges << '\n';
  }
  out << "zero_demand_facilities: " << run.result.zero_demand_facilities.size() << '\n';
  for (const auto& id : run.result.zero_demand_facilities) out << "  " << id << '\n';
  std::vector<std::string> empty_blocks;
  for (const auto& b : run.blocks)
    if (b.n_cells == 0) empty_blocks.push_back(b.block_id);
  out << "empty_blocks: " << empty_blocks.size() << '\n';
  for (const auto& id : empty_blocks) out << "  " << id << '\n';
  out << "camps_without_shelters: " << run.allocation.camps_skipped.size() << '\n';
  for (const auto& id : run.allocation.camps_skipped) out << "  " << id << '\n';
  out << "warnings: " << run.warnings.size() << '\n';
  for (const auto& w : run.warnings) out << "  " << w << '\n';
  return out.str();
}

AccessRun run_access(const RunConfig& cfg, const Dataset& ds) {
  AccessRun run;
  run.warnings = ds.warnings;
  run.grid = grid_for(cfg, ds);
  run.allocation = allocate(run.grid, ds);
  for (const auto& id : run.allocation.camps_skipped)
    run.warnings.push_back("camp '" + id + "' has no shelter area; its population is not allocated");

  DistanceStage dist = compute_distances(cfg, ds, run.grid);
  if (dist.network) {
    run.network_vertices = dist.network->network.vertex_count();
    run.network_edges = dist.network->network.edge_count();
    run.network_dropped_edges = dist.network->dropped_edges;
  }
  run.result = run_scenario(cfg.scenario, ds.facilities, run.allocation.population, run.grid.cells, dist.distances,
                            cfg.kind_settings());
  dist.distances = PairDistances();
  if (!ds.blocks.empty()) run.blocks = aggregate_blocks(run.grid.cells, run.result.field.mean, ds.blocks);

  if (!cfg.out_dir.empty()) {
    const AccessField& f = run.result.field;
    const PopulationField& p = run.allocation.population;
    write_text_file(cfg.out_dir / "field.csv", field_csv(f, p));
    write_text_file(cfg.out_dir / "field.geojson", field_geojson(f, p, cfg.cell_size));
    write_text_file(cfg.out_dir / "summary.csv", summary_csv(f, p));
    if (!ds.blocks.empty()) write_text_file(cfg.out_dir / "blocks.csv", block_summary_csv(run.blocks, false));
    write_text_file(cfg.out_dir / "diagnostics.txt", diagnostics_text(run));
  }
  return run;
}

CompareRun run_compare(const FieldTable& a, const FieldTable& b, std::span<const Block> blocks,
                       const std::filesystem::path& out_dir, double cell_size) {
  CompareRun run;
  run.change = change_field(a.field, b.field);
  if (!blocks.empty()) run.blocks = aggregate_block_change(a.cells, a.field.mean, b.field.mean, blocks);
  if (!out_dir.empty()) {
    write_text_file(out_dir / "change.csv", change_csv(run.change));
    write_text_file(out_dir / "change.geojson", change_geojson(run.change, cell_size));
    if (!blocks.empty()) write_text_file(out_dir / "block_change.csv", block_summary_csv(run.blocks, true));
  }
  return run;
}

ValidateRun run_validate(const FieldTable& field, std::span<const Camp> camps, const CsvTable& survey,
                         std::optional<FacilityKind> kind, Reducer reducer) {
  const std::size_t id_col = survey.column("camp_id");
  const std::size_t value_col = survey.column("people_per_facility");
  std::map<std::string, double> surveyed;
  for (std::size_t r = 0; r < survey.rows.size(); ++r) {
    const double v = survey.number(r, value_col);
    if (!surveyed.emplace(survey.rows[r][id_col], v).second)
      throw Error(survey.source.string() + ": duplicate camp_id '" + survey.rows[r][id_col] + "'");
  }
  std::vector<Block> as_blocks;
  for (const auto& c : camps) as_blocks.push_back({c.camp_id, c.boundary});
  const auto members = block_members(field.cells, as_blocks);
  const Eigen::VectorXd values = kind ? Eigen::VectorXd(field.field.values(*kind)) : field.field.mean;

  std::vector<double> acc;
  std::vector<double> sur;
  ValidateRun out;
  for (std::size_t c = 0; c < camps.size(); ++c) {
    auto it = surveyed.find(camps[c].camp_id);
    if (it == surveyed.end() || !std::isfinite(it->second)) continue;
    const auto m = reduce(values, members[c], reducer, field.population.total);
    if (!m) continue;
    out.camp_ids.push_back(camps[c].camp_id);
    acc.push_back(*m);
    sur.push_back(it->second);
  }
  if (acc.size() < 3) throw Error("validation needs at least 3 camps with both accessibility and survey values");
  out.access = Eigen::Map<const Eigen::VectorXd>(acc.data(), static_cast<Eigen::Index>(acc.size()));
  out.survey = Eigen::Map<const Eigen::VectorXd>(sur.data(), static_cast<Eigen::Index>(sur.size()));
  out.rho = spearman(out.access, out.survey);
  return out;
}

std::string scatter_csv(const ValidateRun& v) {
  std::ostringstream out;
  write_csv_row(out, {"camp_id", "access", "people_per_facility"});
  for (std::size_t i = 0; i < v.camp_ids.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    write_csv_row(out, {v.camp_ids[i], format_number(v.access[k]), format_number(v.survey[k])});
  }
  return out.str();
}

FieldTable read_field(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".geojson" || ext == ".json") return read_field_geojson(path);
  return read_field_csv(path);
}

}  // namespace sfca
