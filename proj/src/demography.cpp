#include "sfca/demography.hpp"

#include "sfca/parallel.hpp"

#include <cmath>
#include <optional>
#include <unordered_map>

namespace sfca {

namespace {

void check_populations(const Camp& c) {
  for (double v : {c.pop_total, c.pop_female, c.pop_male}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("camp '" + c.camp_id + "' has a negative or non-finite population");
  }
}

double shelter_area_in_camp(const Camp& camp, const ShelterSet& shelters) {
  double sum = 0.0;
  for (const auto& s : shelters) {
    if (!s.bbox().intersects(camp.boundary.bbox())) continue;
    sum += intersection_area(s, camp.boundary);
  }
  return sum;
}

}  // namespace

CampDensity density_from_area(const Camp& camp, double shelter_area) {
  check_populations(camp);
  if (!(shelter_area > 0.0)) throw Error("camp '" + camp.camp_id + "' has no shelter area inside its boundary");
  return {camp.pop_total / shelter_area, camp.pop_female / shelter_area, camp.pop_male / shelter_area};
}

CampDensity density_per_camp(const Camp& camp, const ShelterSet& shelters) {
  return density_from_area(camp, shelter_area_in_camp(camp, shelters));
}

Allocation allocate_population(const Grid& grid, std::span<const Camp> camps, const ShelterSet& shelters) {
  const std::size_t n_camps = camps.size();
  std::vector<double> camp_area(n_camps, 0.0);
  parallel_for(n_camps, [&](std::size_t c) {
    check_populations(camps[c]);
    camp_area[c] = shelter_area_in_camp(camps[c], shelters);
  });

  Allocation out;
  std::vector<std::optional<CampDensity>> density(n_camps);
  for (std::size_t c = 0; c < n_camps; ++c) {
    if (camp_area[c] > 0.0) {
      density[c] = density_from_area(camps[c], camp_area[c]);
    } else {
      out.camps_skipped.push_back(camps[c].camp_id);
    }
  }

  std::unordered_map<std::int64_t, std::size_t> index_of;
  index_of.reserve(grid.cells.size());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) index_of.emplace(grid.cells[i].cell_id, i);

  // Shelters bucketed by the cells their bounding box touches, in shelter order.
  std::vector<std::vector<std::size_t>> bucket(grid.cells.size());
  const GridSpec& g = grid.spec;
  for (std::size_t s = 0; s < shelters.size(); ++s) {
    const BBox2& b = shelters[s].bbox();
    const auto c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((b.min.x() - g.origin.x()) / g.cell_size)));
    const auto r0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((b.min.y() - g.origin.y()) / g.cell_size)));
    const auto c1 = std::min<std::int64_t>(g.n_cols - 1, static_cast<std::int64_t>(std::floor((b.max.x() - g.origin.x()) / g.cell_size)));
    const auto r1 = std::min<std::int64_t>(g.n_rows - 1, static_cast<std::int64_t>(std::floor((b.max.y() - g.origin.y()) / g.cell_size)));
    for (auto r = r0; r <= r1; ++r) {
      for (auto c = c0; c <= c1; ++c) {
        if (auto it = index_of.find(g.cell_id(r, c)); it != index_of.end()) bucket[it->second].push_back(s);
      }
    }
  }

  const auto n_cells = static_cast<Eigen::Index>(grid.cells.size());
  out.population.total = Eigen::VectorXd::Zero(n_cells);
  out.population.female = Eigen::VectorXd::Zero(n_cells);
  out.population.male = Eigen::VectorXd::Zero(n_cells);
  out.shelter_area = Eigen::VectorXd::Zero(n_cells);

  parallel_for(grid.cells.size(), [&](std::size_t i) {
    if (bucket[i].empty()) return;
    const Polygon cell = grid.geometry(grid.cells[i]);
    const auto k = static_cast<Eigen::Index>(i);
    for (std::size_t s : bucket[i]) {
      const Polygon& shelter = shelters[s];
      for (std::size_t c = 0; c < n_camps; ++c) {
        if (!density[c] || !camps[c].boundary.bbox().intersects(shelter.bbox())) continue;
        const double a = intersection_area(shelter, camps[c].boundary, cell);
        if (a <= 0.0) continue;
        out.population.total[k] += density[c]->total * a;
        out.population.female[k] += density[c]->female * a;
        out.population.male[k] += density[c]->male * a;
        out.shelter_area[k] += a;
      }
    }
  });
  return out;
}

Allocation allocate_population(const Grid& grid, std::span<const Camp> camps,
                               std::span<const ShelterAreaEntry> areas) {
  std::vector<double> camp_area(camps.size(), 0.0);
  for (const auto& e : areas) {
    if (e.camp_index >= camps.size() || e.cell_index >= grid.cells.size()) {
      throw Error("shelter area entry references an unknown cell or camp");
    }
    if (!(e.area >= 0.0)) throw Error("shelter area entry has a negative area");
    camp_area[e.camp_index] += e.area;
  }

  Allocation out;
  std::vector<std::optional<CampDensity>> density(camps.size());
  for (std::size_t c = 0; c < camps.size(); ++c) {
    if (camp_area[c] > 0.0) {
      density[c] = density_from_area(camps[c], camp_area[c]);
    } else {
      check_populations(camps[c]);
      out.camps_skipped.push_back(camps[c].camp_id);
    }
  }

  const auto n_cells = static_cast<Eigen::Index>(grid.cells.size());
  out.population.total = Eigen::VectorXd::Zero(n_cells);
  out.population.female = Eigen::VectorXd::Zero(n_cells);
  out.population.male = Eigen::VectorXd::Zero(n_cells);
  out.shelter_area = Eigen::VectorXd::Zero(n_cells);
  for (const auto& e : areas) {
    if (!density[e.camp_index]) continue;
    const auto k = static_cast<Eigen::Index>(e.cell_index);
    const CampDensity& d = *density[e.camp_index];
    out.population.total[k] += d.total * e.area;
    out.population.female[k] += d.female * e.area;
    out.population.male[k] += d.male * e.area;
    out.shelter_area[k] += e.area;
  }
  return out;
}

std::map<std::string, double> living_space_series(const std::map<std::string, double>& area_by_epoch,
                                                  const std::map<std::string, double>& pop_by_epoch) {
  std::map<std::string, double> out;
  for (const auto& [epoch, area] : area_by_epoch) {
    const auto it = pop_by_epoch.find(epoch);
    if (it == pop_by_epoch.end()) throw Error("living_space_series: no population for epoch " + epoch);
    if (!(it->second > 0.0)) throw Error("living_space_series: population for epoch " + epoch + " is not positive");
    out[epoch] = area / it->second;
  }
  return out;
}

}  // namespace sfca
