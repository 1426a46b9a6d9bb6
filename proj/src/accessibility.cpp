#include "sfca/accessibility.hpp"

#include "sfca/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace sfca {

std::string_view to_string(FacilityKind k) {
  switch (k) {
    case FacilityKind::kWaterPump: return "water_pump";
    case FacilityKind::kLatrine: return "latrine";
    case FacilityKind::kBathingCubicle: return "bathing_cubicle";
  }
  return "unknown";
}

std::string_view to_string(GenderDesignation g) {
  switch (g) {
    case GenderDesignation::kFemale: return "female";
    case GenderDesignation::kMale: return "male";
    case GenderDesignation::kAll: return "all";
  }
  return "unknown";
}

std::string_view to_string(GenderStream s) {
  switch (s) {
    case GenderStream::kTotal: return "total";
    case GenderStream::kFemale: return "female";
    case GenderStream::kMale: return "male";
  }
  return "unknown";
}

std::optional<FacilityKind> parse_facility_kind(std::string_view s) {
  for (FacilityKind k : kAllKinds)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

std::optional<GenderDesignation> parse_gender(std::string_view s) {
  for (auto g : {GenderDesignation::kFemale, GenderDesignation::kMale, GenderDesignation::kAll})
    if (s == to_string(g)) return g;
  return std::nullopt;
}

std::optional<GenderStream> parse_stream(std::string_view s) {
  for (auto g : {GenderStream::kTotal, GenderStream::kFemale, GenderStream::kMale})
    if (s == to_string(g)) return g;
  return std::nullopt;
}

double KindSettings::max_d0() const {
  double d0 = 0.0;
  for (int k = 0; k < kKindCount; ++k)
    if (enabled[static_cast<std::size_t>(k)]) d0 = std::max(d0, kernel[static_cast<std::size_t>(k)].d0);
  return d0;
}

namespace {

// Column of the demand matrix [total, female, male].
constexpr int kDemandTotal = 0;
constexpr int kDemandFemale = 1;
constexpr int kDemandMale = 2;

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, std::span<const Facility> facilities,
                            const PopulationField& demand, std::span<const GridCell> cells,
                            const PairDistances& distances, const KindSettings& kinds) {
  if (!(cfg.allgender_factor > 0.0 && cfg.allgender_factor <= 1.0))
    throw Error("run_scenario: allgender_factor must lie in (0, 1]");
  const auto n_cells = static_cast<Eigen::Index>(cells.size());
  if (demand.size() != n_cells) throw Error("run_scenario: population field does not match the grid");
  if (distances.rows() != n_cells || distances.cols() != static_cast<Eigen::Index>(facilities.size()))
    throw Error("run_scenario: distance table does not match cells x facilities");
  for (int k = 0; k < kKindCount; ++k) {
    const auto& kern = kinds.kernel[static_cast<std::size_t>(k)];
    if (!(kern.sigma > 0.0) || !(kern.d0 > 0.0)) throw Error("run_scenario: sigma and d0 must be > 0");
  }

  const auto n_fac = static_cast<Eigen::Index>(facilities.size());
  Eigen::VectorXd capacity = Eigen::VectorXd::Zero(n_fac);
  std::vector<int> stream(facilities.size(), kDemandTotal);
  std::vector<bool> used(facilities.size(), false);
  std::size_t n_used = 0;
  for (std::size_t j = 0; j < facilities.size(); ++j) {
    const Facility& f = facilities[j];
    if (!kinds.enabled[static_cast<std::size_t>(f.kind)]) continue;
    if (cfg.gender_stream != GenderStream::kTotal && !f.gender)
      throw Error("run_scenario: facility '" + f.facility_id + "' has no gender designation");
    double s = f.capacity;
    int col = kDemandTotal;
    switch (cfg.gender_stream) {
      case GenderStream::kTotal: break;
      case GenderStream::kFemale:
        if (*f.gender == GenderDesignation::kMale) continue;
        if (*f.gender == GenderDesignation::kAll) {
          s *= cfg.allgender_factor;
        } else {
          col = kDemandFemale;
        }
        break;
      case GenderStream::kMale:
        if (*f.gender == GenderDesignation::kFemale) continue;
        if (*f.gender == GenderDesignation::kMale) col = kDemandMale;
        break;
    }
    capacity[static_cast<Eigen::Index>(j)] = s;
    stream[j] = col;
    used[j] = true;
    ++n_used;
  }

  Eigen::Matrix<double, Eigen::Dynamic, 3> pop(n_cells, 3);
  pop << demand.total, demand.female, demand.male;

  const WeightMatrix<double> weights = kernel_weights<double>(
      distances, [&](std::int64_t j) -> const DecayKernel<double>& {
        return kinds.kernel[static_cast<std::size_t>(facilities[static_cast<std::size_t>(j)].kind)];
      });
  const ProviderRatios<double> ratios = provider_ratios<double>(weights, capacity, pop, stream);

  ScenarioResult out;
  out.facilities_used = n_used;
  for (Eigen::Index j : ratios.zero_demand) {
    if (used[static_cast<std::size_t>(j)]) out.zero_demand_facilities.push_back(facilities[static_cast<std::size_t>(j)].facility_id);
  }

  AccessField& field = out.field;
  field.scenario = std::string(to_string(cfg.gender_stream));
  field.cells.assign(cells.begin(), cells.end());
  field.enabled = kinds.enabled;
  field.by_kind.setZero(n_cells, kKindCount);
  int n_enabled = 0;
  for (FacilityKind kind : kAllKinds) {
    const auto k = static_cast<int>(kind);
    if (!kinds.enabled[static_cast<std::size_t>(k)]) continue;
    ++n_enabled;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_fac);
    for (Eigen::Index j = 0; j < n_fac; ++j)
      if (facilities[static_cast<std::size_t>(j)].kind == kind) r[j] = ratios.ratio[j];
    field.by_kind.col(k) = accessibility_scores<double>(weights, r);
  }
  field.mean = Eigen::VectorXd::Zero(n_cells);
  if (n_enabled > 0) {
    for (int k = 0; k < kKindCount; ++k)
      if (kinds.enabled[static_cast<std::size_t>(k)]) field.mean += field.by_kind.col(k);
    field.mean /= static_cast<double>(n_enabled);
  }
  return out;
}

FieldChange change_field(const AccessField& a, const AccessField& b) {
  if (a.cells.size() != b.cells.size()) throw Error("change_field: fields cover different grids");
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const GridCell& x = a.cells[i];
    const GridCell& y = b.cells[i];
    if (x.row != y.row || x.col != y.col || x.cell_id != y.cell_id || x.centroid != y.centroid)
      throw Error("change_field: fields cover different grids (cell " + std::to_string(x.cell_id) + ")");
  }
  FieldChange out;
  out.cells = a.cells;
  out.by_kind = b.by_kind - a.by_kind;
  out.mean = b.mean - a.mean;
  return out;
}

std::vector<std::vector<std::size_t>> block_members(std::span<const GridCell> cells, std::span<const Block> blocks) {
  std::vector<std::vector<std::size_t>> members(blocks.size());
  parallel_for(blocks.size(), [&](std::size_t b) {
    const Polygon& poly = blocks[b].boundary;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (poly.contains(cells[i].centroid)) members[b].push_back(i);
  });
  return members;
}

namespace {

std::optional<double> mean_over(const Eigen::Ref<const Eigen::VectorXd>& v, std::span<const std::size_t> idx) {
  if (idx.empty()) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i : idx) sum += v[static_cast<Eigen::Index>(i)];
  return sum / static_cast<double>(idx.size());
}

}  // namespace

std::vector<BlockSummary> aggregate_blocks(std::span<const GridCell> cells, const Eigen::Ref<const Eigen::VectorXd>& values,
                                           std::span<const Block> blocks) {
  if (values.size() != static_cast<Eigen::Index>(cells.size())) throw Error("aggregate_blocks: one value per cell required");
  const auto members = block_members(cells, blocks);
  std::vector<BlockSummary> out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out[b].block_id = blocks[b].block_id;
    out[b].n_cells = members[b].size();
    out[b].mean = mean_over(values, members[b]);
  }
  return out;
}

std::vector<BlockSummary> aggregate_block_change(std::span<const GridCell> cells,
                                                 const Eigen::Ref<const Eigen::VectorXd>& before,
                                                 const Eigen::Ref<const Eigen::VectorXd>& after,
                                                 std::span<const Block> blocks) {
  if (before.size() != static_cast<Eigen::Index>(cells.size()) || after.size() != before.size())
    throw Error("aggregate_block_change: one value per cell required");
  const auto members = block_members(cells, blocks);
  const Eigen::VectorXd delta = after - before;
  std::vector<BlockSummary> out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out[b].block_id = blocks[b].block_id;
    out[b].n_cells = members[b].size();
    out[b].mean = mean_over(after, members[b]);
    out[b].before = mean_over(before, members[b]);
    out[b].delta = mean_over(delta, members[b]);
  }
  return out;
}

std::optional<double> reduce(const Eigen::Ref<const Eigen::VectorXd>& values, std::span<const std::size_t> members,
                             Reducer reducer, const Eigen::Ref<const Eigen::VectorXd>& population) {
  if (reducer == Reducer::kCellMean) return mean_over(values, members);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i : members) {
    const auto k = static_cast<Eigen::Index>(i);
    num += population[k] * values[k];
    den += population[k];
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)];
  });
  Eigen::VectorXd ranks(v.size());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[static_cast<Eigen::Index>(order[j + 1])] == v[static_cast<Eigen::Index>(order[i])]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[static_cast<Eigen::Index>(order[k])] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw Error("spearman: series lengths differ");
  if (x.size() < 3) throw Error("spearman: at least 3 observations required");
  if (!x.allFinite() || !y.allFinite()) throw Error("spearman: non-finite observation");
  // Doubled ranks are integers, so centering and the sums below are exact.
  const auto n = static_cast<double>(x.size());
  const Eigen::ArrayXd rx = 2.0 * average_ranks(x).array() - (n + 1.0);
  const Eigen::ArrayXd ry = 2.0 * average_ranks(y).array() - (n + 1.0);
  const double vx = rx.square().sum();
  const double vy = ry.square().sum();
  if (vx == 0.0 || vy == 0.0) throw Error("spearman: constant series has no rank correlation");
  const double cov = (rx * ry).sum();
  // Without ties vx == vy and the quotient is a single rounding.
  const double denom = vx == vy ? vx : std::sqrt(vx) * std::sqrt(vy);
  return std::clamp(cov / denom, -1.0, 1.0);
}

}  // namespace sfca
