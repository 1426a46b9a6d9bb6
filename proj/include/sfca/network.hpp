#pragma once

#include "sfca/geometry.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace sfca {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct Edge {
  VertexId u = 0;
  VertexId v = 0;
  double length = 0.0;
};

using Polyline = std::vector<Point>;

/// Position on the network: a point at `position` meters from edge.u along
/// `edge`, plus the Euclidean offset from the original location.
struct SnapResult {
  EdgeId edge = 0;
  double position = 0.0;
  Point anchor{0.0, 0.0};
  double offset = 0.0;
};

/// Undirected pedestrian graph, immutable after construction.
class PedestrianNetwork {
 public:
  PedestrianNetwork() = default;
  PedestrianNetwork(std::vector<Point> vertices, std::vector<Edge> edges);

  [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] std::size_t vertex_count() const { return vertices_.size(); }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
  [[nodiscard]] bool empty() const { return edges_.empty(); }

  /// Nearest point on any edge; ties go to the lowest edge id.
  [[nodiscard]] SnapResult snap(const Point& p) const;

  /// Vertex the anchor coincides with, if it sits on an edge end.
  [[nodiscard]] std::optional<VertexId> anchor_vertex(const SnapResult& s) const;

 private:
  void build_index();

  std::vector<Point> vertices_;
  std::vector<Edge> edges_;
  // Uniform bucket grid over edge bounding boxes.
  Point index_origin_{0.0, 0.0};
  double index_cell_ = 1.0;
  std::int64_t index_nx_ = 0;
  std::int64_t index_ny_ = 0;
  std::vector<std::uint32_t> bucket_offsets_;
  std::vector<EdgeId> bucket_edges_;
};

struct NetworkBuild {
  PedestrianNetwork network;
  std::size_t dropped_edges = 0;   // zero length after endpoint merging
  std::size_t merged_points = 0;   // input coordinates folded into an existing vertex
};

/// Chain each polyline into edges, merging coordinates closer than
/// `snap_tolerance` into the first vertex created in input order.
[[nodiscard]] NetworkBuild build_network(std::span<const Polyline> segments, double snap_tolerance = 0.5);

[[nodiscard]] inline SnapResult snap(const Point& p, const PedestrianNetwork& net) { return net.snap(p); }

/// Sparse source-by-target distance table. Rows list the targets reached
/// within the cutoff in increasing target order; absent entries are
/// unreachable.
struct DistanceMatrixBlock {
  std::size_t n_sources = 0;
  std::size_t n_targets = 0;
  std::vector<std::size_t> row_offsets;  // size n_sources + 1
  std::vector<std::uint32_t> targets;
  std::vector<double> distances;

  [[nodiscard]] double at(std::size_t source, std::size_t target) const;
  [[nodiscard]] std::size_t row_size(std::size_t source) const {
    return row_offsets[source + 1] - row_offsets[source];
  }
};

/// Batched truncated one-to-all trees over a compact, locality-reordered
/// adjacency layout. Exact: every reported distance is the minimum over
/// network paths of the sum of edge lengths, evaluated in path order.
class ShortestPathTrees {
 public:
  explicit ShortestPathTrees(const PedestrianNetwork& net);

  /// Distances from each source anchor to each target anchor, <= cutoff.
  [[nodiscard]] DistanceMatrixBlock compute(std::span<const SnapResult> sources,
                                            std::span<const SnapResult> targets, double cutoff) const;

  /// Per-source cutoffs; a non-positive cutoff keeps only coincident targets.
  [[nodiscard]] DistanceMatrixBlock compute(std::span<const SnapResult> sources,
                                            std::span<const SnapResult> targets,
                                            std::span<const double> cutoffs) const;

  /// Distance to every vertex (original ids), kUnreachable beyond cutoff.
  [[nodiscard]] std::vector<double> vertex_distances(const SnapResult& source, double cutoff) const;

 private:
  struct Arc {
    VertexId head;   // reordered id
    EdgeId edge;     // original edge id
    double length;
    bool tail_is_u;  // tail vertex is edge.u
  };
  struct Workspace;

  void run_tree(const SnapResult& source, double cutoff, Workspace& ws) const;

  const PedestrianNetwork* net_;
  std::vector<VertexId> to_local_;   // original -> reordered
  std::vector<VertexId> to_global_;  // reordered -> original
  std::vector<std::uint32_t> arc_offsets_;
  std::vector<Arc> arcs_;
};

[[nodiscard]] DistanceMatrixBlock shortest_path_trees(const PedestrianNetwork& net,
                                                      std::span<const SnapResult> sources,
                                                      std::span<const SnapResult> targets, double cutoff);

/// Total distance between two snapped points: the straight line when it is
/// shorter than the two offsets combined, otherwise the network distance
/// plus both offsets.
[[nodiscard]] inline double pair_distance(double euclid, double offset_i, double offset_j, double network) {
  if (euclid < offset_i + offset_j) return euclid;
  return network + offset_i + offset_j;
}

/// Bucket grid over points for radius queries.
class PointIndex {
 public:
  PointIndex(std::span<const Point> points, double cell);

  /// Indices of points within `radius` of `p` (inclusive), ascending.
  [[nodiscard]] std::vector<std::uint32_t> within(const Point& p, double radius) const;

 private:
  std::span<const Point> points_;
  Point origin_{0.0, 0.0};
  double cell_ = 1.0;
  std::int64_t nx_ = 0;
  std::int64_t ny_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> ids_;
};

/// Sparse (demand x supply) matrix of pair distances <= cutoff. Stored
/// entries are exactly the pairs inside the cutoff, zero distances included.
using PairDistances = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

/// Straight-line distances for every pair within `cutoff`.
[[nodiscard]] PairDistances euclidean_pair_distances(std::span<const Point> demand,
                                                     std::span<const Point> supply, double cutoff);

/// Network distances with offsets and the straight-line fallback, for every
/// pair whose combined distance is within `cutoff`.
[[nodiscard]] PairDistances network_pair_distances(const PedestrianNetwork& net,
                                                   std::span<const Point> demand,
                                                   std::span<const SnapResult> demand_snaps,
                                                   std::span<const Point> supply,
                                                   std::span<const SnapResult> supply_snaps, double cutoff);

}  // namespace sfca
