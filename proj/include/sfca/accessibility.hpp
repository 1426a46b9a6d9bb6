#pragma once

#include "sfca/geometry.hpp"
#include "sfca/grid.hpp"
#include "sfca/demography.hpp"
#include "sfca/network.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sfca {

enum class FacilityKind { kWaterPump = 0, kLatrine = 1, kBathingCubicle = 2 };
inline constexpr int kKindCount = 3;
inline constexpr std::array<FacilityKind, kKindCount> kAllKinds{FacilityKind::kWaterPump, FacilityKind::kLatrine,
                                                               FacilityKind::kBathingCubicle};

enum class GenderDesignation { kFemale, kMale, kAll };
enum class GenderStream { kTotal, kFemale, kMale };

[[nodiscard]] std::string_view to_string(FacilityKind k);
[[nodiscard]] std::string_view to_string(GenderDesignation g);
[[nodiscard]] std::string_view to_string(GenderStream s);
[[nodiscard]] std::optional<FacilityKind> parse_facility_kind(std::string_view s);
[[nodiscard]] std::optional<GenderDesignation> parse_gender(std::string_view s);
[[nodiscard]] std::optional<GenderStream> parse_stream(std::string_view s);

struct Facility {
  std::string facility_id;
  Point location{0.0, 0.0};
  FacilityKind kind = FacilityKind::kWaterPump;
  double capacity = 1.0;  // physical units at the location
  std::optional<GenderDesignation> gender;
};

// ---------------------------------------------------------------------------
// Two-step floating catchment core, generic over the scalar type.

/// Truncated Gaussian distance decay.
template <typename Scalar>
struct DecayKernel {
  Scalar sigma = Scalar(402);
  Scalar d0 = Scalar(1609);
};

/// exp(-d^2 / sigma^2) inside the catchment, 0 beyond it.
template <typename Scalar>
[[nodiscard]] Scalar decay_weight(Scalar d, const DecayKernel<Scalar>& k) {
  using std::exp;
  if (!(d >= Scalar(0))) throw Error("decay_weight: distance must be >= 0");
  if (d > k.d0) return Scalar(0);
  return exp(-(d * d) / (k.sigma * k.sigma));
}

/// Demand x supply decay weights; sparse with the pattern of the distances.
template <typename Scalar>
using WeightMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, std::int64_t>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Weights with a kernel chosen per supply column.
template <typename Scalar, typename KernelOf>
[[nodiscard]] WeightMatrix<Scalar> kernel_weights(const PairDistances& d, KernelOf&& kernel_of) {
  WeightMatrix<Scalar> k = d.cast<Scalar>();
  for (std::int64_t j = 0; j < k.outerSize(); ++j) {
    const DecayKernel<Scalar>& kern = kernel_of(j);
    for (typename WeightMatrix<Scalar>::InnerIterator it(k, j); it; ++it) it.valueRef() = decay_weight(it.value(), kern);
  }
  return k;
}

template <typename Scalar>
[[nodiscard]] WeightMatrix<Scalar> kernel_weights(const PairDistances& d, const DecayKernel<Scalar>& kernel) {
  return kernel_weights<Scalar>(d, [&](std::int64_t) -> const DecayKernel<Scalar>& { return kernel; });
}

template <typename Scalar>
struct ProviderRatios {
  Vector<Scalar> ratio;            // R_j
  Vector<Scalar> weighted_demand;  // sum_i P_i K_ij
  std::vector<Eigen::Index> zero_demand;
};

/// Step one with a demand stream chosen per facility: column `stream[j]`
/// of `demand` competes for facility j. Zero weighted demand gives R_j = 0.
template <typename Scalar, typename DerivedS, typename DerivedP>
[[nodiscard]] ProviderRatios<Scalar> provider_ratios(const WeightMatrix<Scalar>& weights,
                                                     const Eigen::MatrixBase<DerivedS>& capacity,
                                                     const Eigen::MatrixBase<DerivedP>& demand,
                                                     std::span<const int> stream) {
  if (capacity.size() != weights.cols() || static_cast<Eigen::Index>(stream.size()) != weights.cols())
    throw Error("provider_ratios: capacity and stream must have one entry per facility");
  if (demand.rows() != weights.rows()) throw Error("provider_ratios: demand must have one row per cell");
  if ((demand.array() < Scalar(0)).any() || !demand.allFinite()) throw Error("provider_ratios: negative population");

  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pressure = weights.transpose() * demand;
  ProviderRatios<Scalar> out;
  out.ratio.setZero(weights.cols());
  out.weighted_demand.resize(weights.cols());
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    const int s = stream[static_cast<std::size_t>(j)];
    if (s < 0 || s >= demand.cols()) throw Error("provider_ratios: stream index out of range");
    const Scalar w = pressure(j, s);
    out.weighted_demand[j] = w;
    if (w > Scalar(0)) {
      out.ratio[j] = capacity[j] / w;
    } else {
      out.zero_demand.push_back(j);
    }
  }
  return out;
}

/// Step one against a single demand vector.
template <typename Scalar, typename DerivedS, typename DerivedP>
[[nodiscard]] ProviderRatios<Scalar> provider_ratios(const WeightMatrix<Scalar>& weights,
                                                     const Eigen::MatrixBase<DerivedS>& capacity,
                                                     const Eigen::MatrixBase<DerivedP>& demand) {
  const std::vector<int> stream(static_cast<std::size_t>(weights.cols()), 0);
  return provider_ratios<Scalar>(weights, capacity, demand, stream);
}

/// Step two: A_i = sum_j R_j K_ij.
template <typename Scalar, typename DerivedR>
[[nodiscard]] Vector<Scalar> accessibility_scores(const WeightMatrix<Scalar>& weights,
                                                  const Eigen::MatrixBase<DerivedR>& ratio) {
  if (ratio.size() != weights.cols()) throw Error("accessibility_scores: one ratio per facility required");
  return weights * ratio;
}

/// Persons per facility; +inf when the score is zero.
template <std::floating_point Scalar>
[[nodiscard]] Scalar people_per_facility(Scalar a) {
  return a > Scalar(0) ? Scalar(1) / a : std::numeric_limits<Scalar>::infinity();
}

template <typename Derived>
[[nodiscard]] auto people_per_facility(const Eigen::ArrayBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  return a.unaryExpr([](Scalar v) { return people_per_facility(v); });
}

// ---------------------------------------------------------------------------
// Scenario fields

struct ScenarioConfig {
  GenderStream gender_stream = GenderStream::kTotal;
  double allgender_factor = 1.0;  // applied to all-gender capacity in the female stream
};

/// Per-kind catchment kernels plus the set of kinds taking part.
struct KindSettings {
  std::array<DecayKernel<double>, kKindCount> kernel{};
  std::array<bool, kKindCount> enabled{true, true, true};

  [[nodiscard]] double max_d0() const;
};

/// Scores for each grid cell, one column per facility kind.
struct AccessField {
  std::string scenario = "total";
  std::vector<GridCell> cells;
  Eigen::Matrix<double, Eigen::Dynamic, kKindCount> by_kind;
  Eigen::VectorXd mean;  // unweighted mean over enabled kinds
  std::array<bool, kKindCount> enabled{true, true, true};

  [[nodiscard]] auto values(FacilityKind k) const { return by_kind.col(static_cast<int>(k)); }
};

struct ScenarioResult {
  AccessField field;
  std::vector<std::string> zero_demand_facilities;
  std::size_t facilities_used = 0;
};

/// Gender-aware two-step run over precomputed pair distances (cells x facilities).
[[nodiscard]] ScenarioResult run_scenario(const ScenarioConfig& cfg, std::span<const Facility> facilities,
                                          const PopulationField& demand, std::span<const GridCell> cells,
                                          const PairDistances& distances, const KindSettings& kinds);

struct FieldChange {
  std::vector<GridCell> cells;
  Eigen::Matrix<double, Eigen::Dynamic, kKindCount> by_kind;
  Eigen::VectorXd mean;
};

/// b - a per cell and kind. Throws unless both fields cover the same cells.
[[nodiscard]] FieldChange change_field(const AccessField& a, const AccessField& b);

struct Block {
  std::string block_id;
  Polygon boundary;
};

struct BlockSummary {
  std::string block_id;
  std::size_t n_cells = 0;
  std::optional<double> mean;    // empty block: no value
  std::optional<double> before;  // change summaries only
  std::optional<double> delta;   // change summaries only
};

/// Member cell indices per block, by centroid containment.
[[nodiscard]] std::vector<std::vector<std::size_t>> block_members(std::span<const GridCell> cells,
                                                                  std::span<const Block> blocks);

[[nodiscard]] std::vector<BlockSummary> aggregate_blocks(std::span<const GridCell> cells,
                                                         const Eigen::Ref<const Eigen::VectorXd>& values,
                                                         std::span<const Block> blocks);

[[nodiscard]] std::vector<BlockSummary> aggregate_block_change(std::span<const GridCell> cells,
                                                               const Eigen::Ref<const Eigen::VectorXd>& before,
                                                               const Eigen::Ref<const Eigen::VectorXd>& after,
                                                               std::span<const Block> blocks);

enum class Reducer { kCellMean, kPopulationWeighted };

/// Mean of `values` over `members`; population-weighted when requested.
[[nodiscard]] std::optional<double> reduce(const Eigen::Ref<const Eigen::VectorXd>& values,
                                           std::span<const std::size_t> members, Reducer reducer,
                                           const Eigen::Ref<const Eigen::VectorXd>& population);

/// Fractional ranks, ties sharing their average rank (1-based).
[[nodiscard]] Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Spearman rank correlation. Throws on length < 3, unequal lengths or a
/// constant series.
[[nodiscard]] double spearman(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace sfca
