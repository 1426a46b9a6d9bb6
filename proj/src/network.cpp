#include "sfca/network.hpp"

#include "sfca/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <unordered_map>

namespace sfca {

namespace {

struct CellKey {
  std::int64_t x;
  std::int64_t y;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<std::int64_t>{}(k.x * 0x9E3779B97F4A7C15LL ^ k.y);
  }
};

// Chebyshev distance in cells from (cx, cy) to the rectangle [0, nx) x [0, ny).
std::int64_t ring_start(std::int64_t cx, std::int64_t cy, std::int64_t nx, std::int64_t ny) {
  const std::int64_t dx = cx < 0 ? -cx : (cx >= nx ? cx - nx + 1 : 0);
  const std::int64_t dy = cy < 0 ? -cy : (cy >= ny ? cy - ny + 1 : 0);
  return std::max(dx, dy);
}

// Visit bucket cells at Chebyshev distance exactly r from (cx, cy), clipped.
template <typename Fn>
void for_ring(std::int64_t cx, std::int64_t cy, std::int64_t r, std::int64_t nx, std::int64_t ny, Fn&& fn) {
  const std::int64_t y0 = std::max<std::int64_t>(0, cy - r);
  const std::int64_t y1 = std::min<std::int64_t>(ny - 1, cy + r);
  for (std::int64_t y = y0; y <= y1; ++y) {
    if (y == cy - r || y == cy + r) {
      const std::int64_t x0 = std::max<std::int64_t>(0, cx - r);
      const std::int64_t x1 = std::min<std::int64_t>(nx - 1, cx + r);
      for (std::int64_t x = x0; x <= x1; ++x) fn(x, y);
    } else {
      if (cx - r >= 0 && cx - r < nx) fn(cx - r, y);
      if (r > 0 && cx + r >= 0 && cx + r < nx) fn(cx + r, y);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PedestrianNetwork

PedestrianNetwork::PedestrianNetwork(std::vector<Point> vertices, std::vector<Edge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
  for (const auto& p : vertices_) {
    if (!p.allFinite()) throw Error("network vertex has non-finite coordinates");
  }
  for (const auto& e : edges_) {
    if (e.u >= vertices_.size() || e.v >= vertices_.size()) throw Error("network edge references a missing vertex");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) throw Error("network edge length must be positive");
  }
  build_index();
}

void PedestrianNetwork::build_index() {
  bucket_offsets_.clear();
  bucket_edges_.clear();
  if (edges_.empty()) return;
  BBox2 box;
  double total = 0.0;
  for (const auto& e : edges_) {
    box.extend(vertices_[e.u]);
    box.extend(vertices_[e.v]);
    total += e.length;
  }
  const Point extent = (box.max - box.min).cwiseMax(Point::Constant(1e-9));
  const double mean_len = total / static_cast<double>(edges_.size());
  // Roughly one bucket per edge, never finer than the mean edge length.
  const double by_count = std::sqrt(extent.x() * extent.y() / static_cast<double>(edges_.size()));
  index_cell_ = std::max({mean_len, by_count, 1e-6});
  index_origin_ = box.min;
  index_nx_ = static_cast<std::int64_t>(extent.x() / index_cell_) + 1;
  index_ny_ = static_cast<std::int64_t>(extent.y() / index_cell_) + 1;

  auto cell_range = [&](const Edge& e) {
    const Point a = (vertices_[e.u] - index_origin_) / index_cell_;
    const Point b = (vertices_[e.v] - index_origin_) / index_cell_;
    const auto x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::min(a.x(), b.x()))), 0, index_nx_ - 1);
    const auto x1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::max(a.x(), b.x()))), 0, index_nx_ - 1);
    const auto y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::min(a.y(), b.y()))), 0, index_ny_ - 1);
    const auto y1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::max(a.y(), b.y()))), 0, index_ny_ - 1);
    return std::array<std::int64_t, 4>{x0, x1, y0, y1};
  };

  const auto n_buckets = static_cast<std::size_t>(index_nx_ * index_ny_);
  std::vector<std::uint32_t> counts(n_buckets + 1, 0);
  for (const auto& e : edges_) {
    const auto [x0, x1, y0, y1] = cell_range(e);
    for (auto y = y0; y <= y1; ++y)
      for (auto x = x0; x <= x1; ++x) ++counts[static_cast<std::size_t>(y * index_nx_ + x) + 1];
  }
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  bucket_offsets_ = counts;
  bucket_edges_.resize(counts.back());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (EdgeId id = 0; id < edges_.size(); ++id) {
    const auto [x0, x1, y0, y1] = cell_range(edges_[id]);
    for (auto y = y0; y <= y1; ++y)
      for (auto x = x0; x <= x1; ++x) bucket_edges_[fill[static_cast<std::size_t>(y * index_nx_ + x)]++] = id;
  }
}

SnapResult PedestrianNetwork::snap(const Point& p) const {
  if (edges_.empty()) throw Error("snap: network is empty");
  SnapResult best;
  double best_dist = kUnreachable;
  EdgeId best_edge = std::numeric_limits<EdgeId>::max();
  auto consider = [&](EdgeId id) {
    const Edge& e = edges_[id];
    const Point& a = vertices_[e.u];
    const Point& b = vertices_[e.v];
    const double t = project_to_segment(p, a, b);
    const Point foot = t == 1.0 ? b : Point(a + t * (b - a));
    const double d = euclidean(p, foot);
    if (d < best_dist || (d == best_dist && id < best_edge)) {
      best_dist = d;
      best_edge = id;
      best = {id, t == 1.0 ? e.length : t * e.length, foot, d};
    }
  };

  const Point rel = (p - index_origin_) / index_cell_;
  const auto cx = static_cast<std::int64_t>(std::floor(rel.x()));
  const auto cy = static_cast<std::int64_t>(std::floor(rel.y()));
  const std::int64_t r_max = std::max({std::abs(cx) + index_nx_, std::abs(cy) + index_ny_});
  for (std::int64_t r = ring_start(cx, cy, index_nx_, index_ny_); r <= r_max; ++r) {
    for_ring(cx, cy, r, index_nx_, index_ny_, [&](std::int64_t x, std::int64_t y) {
      const auto b = static_cast<std::size_t>(y * index_nx_ + x);
      for (auto k = bucket_offsets_[b]; k < bucket_offsets_[b + 1]; ++k) consider(bucket_edges_[k]);
    });
    // Anything not yet visited lies at least r cells away.
    if (best_dist < static_cast<double>(r) * index_cell_) break;
  }
  return best;
}

std::optional<VertexId> PedestrianNetwork::anchor_vertex(const SnapResult& s) const {
  const Edge& e = edges_.at(s.edge);
  if (s.position == 0.0) return e.u;
  if (s.position == e.length) return e.v;
  return std::nullopt;
}

NetworkBuild build_network(std::span<const Polyline> segments, double snap_tolerance) {
  if (segments.empty()) throw Error("build_network: no footpath segments");
  if (!(snap_tolerance >= 0.0)) throw Error("build_network: snap tolerance must be >= 0");

  NetworkBuild out;
  std::vector<Point> vertices;
  std::vector<Edge> edges;
  std::map<std::pair<double, double>, VertexId> exact;
  std::unordered_map<CellKey, std::vector<VertexId>, CellKeyHash> buckets;

  auto vertex_for = [&](const Point& p) -> VertexId {
    if (!p.allFinite()) throw Error("build_network: non-finite footpath coordinate");
    if (snap_tolerance == 0.0) {
      auto [it, inserted] = exact.try_emplace({p.x(), p.y()}, static_cast<VertexId>(vertices.size()));
      if (inserted) {
        vertices.push_back(p);
      } else {
        ++out.merged_points;
      }
      return it->second;
    }
    const auto kx = static_cast<std::int64_t>(std::floor(p.x() / snap_tolerance));
    const auto ky = static_cast<std::int64_t>(std::floor(p.y() / snap_tolerance));
    std::optional<VertexId> found;
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = buckets.find({kx + dx, ky + dy});
        if (it == buckets.end()) continue;
        for (VertexId v : it->second) {
          if (euclidean(vertices[v], p) <= snap_tolerance && (!found || v < *found)) found = v;
        }
      }
    }
    if (found) {
      ++out.merged_points;
      return *found;
    }
    const auto id = static_cast<VertexId>(vertices.size());
    vertices.push_back(p);
    buckets[{kx, ky}].push_back(id);
    return id;
  };

  for (const auto& line : segments) {
    if (line.size() < 2) {
      ++out.dropped_edges;
      continue;
    }
    VertexId prev = vertex_for(line.front());
    for (std::size_t k = 1; k < line.size(); ++k) {
      const VertexId cur = vertex_for(line[k]);
      const double len = euclidean(vertices[prev], vertices[cur]);
      if (cur == prev || !(len > 0.0)) {
        ++out.dropped_edges;
      } else {
        edges.push_back({prev, cur, len});
      }
      prev = cur;
    }
  }
  if (edges.empty()) throw Error("build_network: every footpath segment collapsed to zero length");
  out.network = PedestrianNetwork(std::move(vertices), std::move(edges));
  return out;
}

// ---------------------------------------------------------------------------
// DistanceMatrixBlock

double DistanceMatrixBlock::at(std::size_t source, std::size_t target) const {
  const auto b = targets.begin() + static_cast<std::ptrdiff_t>(row_offsets.at(source));
  const auto e = targets.begin() + static_cast<std::ptrdiff_t>(row_offsets.at(source + 1));
  const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(target));
  if (it == e || *it != target) return kUnreachable;
  return distances[static_cast<std::size_t>(it - targets.begin())];
}

// ---------------------------------------------------------------------------
// ShortestPathTrees

struct ShortestPathTrees::Workspace {
  std::vector<double> dist;
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  std::vector<std::pair<double, VertexId>> heap;
  std::vector<VertexId> settled;

  explicit Workspace(std::size_t n) : dist(n, kUnreachable), stamp(n, 0) {}

  void reset() {
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      epoch = 1;
    }
    heap.clear();
    settled.clear();
  }
  [[nodiscard]] double get(VertexId v) const { return stamp[v] == epoch ? dist[v] : kUnreachable; }
  void set(VertexId v, double d) {
    stamp[v] = epoch;
    dist[v] = d;
  }
};

ShortestPathTrees::ShortestPathTrees(const PedestrianNetwork& net) : net_(&net) {
  const std::size_t n = net.vertex_count();
  const auto& edges = net.edges();

  // Original adjacency for the ordering pass.
  std::vector<std::uint32_t> deg(n + 1, 0);
  for (const auto& e : edges) {
    ++deg[e.u + 1];
    ++deg[e.v + 1];
  }
  for (std::size_t i = 1; i <= n; ++i) deg[i] += deg[i - 1];
  std::vector<EdgeId> inc(deg.back());
  {
    std::vector<std::uint32_t> fill(deg.begin(), deg.end() - 1);
    for (EdgeId id = 0; id < edges.size(); ++id) {
      inc[fill[edges[id].u]++] = id;
      inc[fill[edges[id].v]++] = id;
    }
  }

  // Breadth-first renumbering keeps tree frontiers contiguous in memory.
  to_local_.assign(n, std::numeric_limits<VertexId>::max());
  to_global_.clear();
  to_global_.reserve(n);
  std::deque<VertexId> queue;
  for (VertexId root = 0; root < n; ++root) {
    if (to_local_[root] != std::numeric_limits<VertexId>::max()) continue;
    to_local_[root] = static_cast<VertexId>(to_global_.size());
    to_global_.push_back(root);
    queue.push_back(root);
    while (!queue.empty()) {
      const VertexId x = queue.front();
      queue.pop_front();
      for (auto k = deg[x]; k < deg[x + 1]; ++k) {
        const Edge& e = edges[inc[k]];
        const VertexId y = e.u == x ? e.v : e.u;
        if (to_local_[y] != std::numeric_limits<VertexId>::max()) continue;
        to_local_[y] = static_cast<VertexId>(to_global_.size());
        to_global_.push_back(y);
        queue.push_back(y);
      }
    }
  }

  arc_offsets_.assign(n + 1, 0);
  for (VertexId local = 0; local < n; ++local) {
    const VertexId g = to_global_[local];
    arc_offsets_[local + 1] = arc_offsets_[local] + (deg[g + 1] - deg[g]);
  }
  arcs_.resize(arc_offsets_.back());
  for (VertexId local = 0; local < n; ++local) {
    const VertexId g = to_global_[local];
    auto out = arc_offsets_[local];
    for (auto k = deg[g]; k < deg[g + 1]; ++k) {
      const Edge& e = edges[inc[k]];
      const bool tail_is_u = e.u == g;
      arcs_[out++] = {to_local_[tail_is_u ? e.v : e.u], inc[k], e.length, tail_is_u};
    }
  }
}

void ShortestPathTrees::run_tree(const SnapResult& source, double cutoff, Workspace& ws) const {
  ws.reset();
  const Edge& se = net_->edges().at(source.edge);
  auto push = [&](VertexId v, double d) {
    if (d > cutoff || !(d < ws.get(v))) return;
    ws.set(v, d);
    ws.heap.emplace_back(d, v);
    std::push_heap(ws.heap.begin(), ws.heap.end(), std::greater<>{});
  };
  push(to_local_[se.u], source.position);
  push(to_local_[se.v], se.length - source.position);
  while (!ws.heap.empty()) {
    std::pop_heap(ws.heap.begin(), ws.heap.end(), std::greater<>{});
    const auto [d, x] = ws.heap.back();
    ws.heap.pop_back();
    if (d > ws.get(x)) continue;  // stale entry
    ws.settled.push_back(x);
    for (auto k = arc_offsets_[x]; k < arc_offsets_[x + 1]; ++k) push(arcs_[k].head, d + arcs_[k].length);
  }
}

std::vector<double> ShortestPathTrees::vertex_distances(const SnapResult& source, double cutoff) const {
  Workspace ws(net_->vertex_count());
  run_tree(source, cutoff, ws);
  std::vector<double> out(net_->vertex_count(), kUnreachable);
  for (VertexId x : ws.settled) out[to_global_[x]] = ws.dist[x];
  return out;
}

DistanceMatrixBlock ShortestPathTrees::compute(std::span<const SnapResult> sources,
                                               std::span<const SnapResult> targets, double cutoff) const {
  if (!(cutoff > 0.0)) throw Error("shortest_path_trees: cutoff must be > 0");
  const std::vector<double> cutoffs(sources.size(), cutoff);
  return compute(sources, targets, cutoffs);
}

DistanceMatrixBlock ShortestPathTrees::compute(std::span<const SnapResult> sources,
                                               std::span<const SnapResult> targets,
                                               std::span<const double> cutoffs) const {
  if (cutoffs.size() != sources.size()) throw Error("shortest_path_trees: one cutoff per source required");
  const auto& edges = net_->edges();
  for (const auto& s : sources)
    if (s.edge >= edges.size()) throw Error("shortest_path_trees: source anchor references a missing edge");

  // Targets grouped by the edge they sit on.
  std::vector<std::uint32_t> t_off(edges.size() + 1, 0);
  for (const auto& t : targets) {
    if (t.edge >= edges.size()) throw Error("shortest_path_trees: target anchor references a missing edge");
    ++t_off[t.edge + 1];
  }
  for (std::size_t i = 1; i < t_off.size(); ++i) t_off[i] += t_off[i - 1];
  std::vector<std::uint32_t> t_ids(targets.size());
  {
    std::vector<std::uint32_t> fill(t_off.begin(), t_off.end() - 1);
    for (std::uint32_t t = 0; t < targets.size(); ++t) t_ids[fill[targets[t].edge]++] = t;
  }

  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(sources.size());
  parallel_chunks(sources.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    Workspace ws(net_->vertex_count());
    std::vector<double> best(targets.size(), kUnreachable);
    std::vector<std::uint32_t> touched;
    for (std::size_t s = begin; s < end; ++s) {
      const SnapResult& src = sources[s];
      const double cutoff = cutoffs[s];
      touched.clear();
      auto offer = [&](std::uint32_t t, double d) {
        if (d > cutoff) return;
        if (best[t] == kUnreachable) touched.push_back(t);
        if (d < best[t]) best[t] = d;
      };
      if (cutoff >= 0.0) {
        run_tree(src, cutoff, ws);
        for (VertexId x : ws.settled) {
          const double dx = ws.dist[x];
          for (auto k = arc_offsets_[x]; k < arc_offsets_[x + 1]; ++k) {
            const Arc& arc = arcs_[k];
            for (auto q = t_off[arc.edge]; q < t_off[arc.edge + 1]; ++q) {
              const std::uint32_t t = t_ids[q];
              const double along = arc.tail_is_u ? targets[t].position : arc.length - targets[t].position;
              offer(t, dx + along);
            }
          }
        }
        for (auto q = t_off[src.edge]; q < t_off[src.edge + 1]; ++q) {
          const std::uint32_t t = t_ids[q];
          offer(t, std::abs(src.position - targets[t].position));
        }
      }
      std::sort(touched.begin(), touched.end());
      auto& row = rows[s];
      row.reserve(touched.size());
      for (std::uint32_t t : touched) {
        row.emplace_back(t, best[t]);
        best[t] = kUnreachable;
      }
    }
  });

  DistanceMatrixBlock block;
  block.n_sources = sources.size();
  block.n_targets = targets.size();
  block.row_offsets.assign(sources.size() + 1, 0);
  for (std::size_t s = 0; s < rows.size(); ++s) block.row_offsets[s + 1] = block.row_offsets[s] + rows[s].size();
  block.targets.reserve(block.row_offsets.back());
  block.distances.reserve(block.row_offsets.back());
  for (auto& row : rows) {
    for (const auto& [t, d] : row) {
      block.targets.push_back(t);
      block.distances.push_back(d);
    }
    row = {};
  }
  return block;
}

DistanceMatrixBlock shortest_path_trees(const PedestrianNetwork& net, std::span<const SnapResult> sources,
                                        std::span<const SnapResult> targets, double cutoff) {
  return ShortestPathTrees(net).compute(sources, targets, cutoff);
}

// ---------------------------------------------------------------------------
// PointIndex and pair tables

PointIndex::PointIndex(std::span<const Point> points, double cell) : points_(points) {
  BBox2 box;
  for (const auto& p : points) box.extend(p);
  if (points.empty()) {
    box.extend(Point::Zero());
  }
  cell_ = std::max(cell, 1e-6);
  origin_ = box.min;
  nx_ = static_cast<std::int64_t>((box.max.x() - box.min.x()) / cell_) + 1;
  ny_ = static_cast<std::int64_t>((box.max.y() - box.min.y()) / cell_) + 1;
  // Keep the bucket count proportional to the point count.
  while (nx_ * ny_ > 4 * static_cast<std::int64_t>(points.size()) + 16) {
    cell_ *= 2.0;
    nx_ = static_cast<std::int64_t>((box.max.x() - box.min.x()) / cell_) + 1;
    ny_ = static_cast<std::int64_t>((box.max.y() - box.min.y()) / cell_) + 1;
  }
  const auto n_buckets = static_cast<std::size_t>(nx_ * ny_);
  auto bucket_of = [&](const Point& p) {
    const auto x = std::clamp<std::int64_t>(static_cast<std::int64_t>((p.x() - origin_.x()) / cell_), 0, nx_ - 1);
    const auto y = std::clamp<std::int64_t>(static_cast<std::int64_t>((p.y() - origin_.y()) / cell_), 0, ny_ - 1);
    return static_cast<std::size_t>(y * nx_ + x);
  };
  offsets_.assign(n_buckets + 1, 0);
  for (const auto& p : points) ++offsets_[bucket_of(p) + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  ids_.resize(points.size());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t i = 0; i < points.size(); ++i) ids_[fill[bucket_of(points[i])]++] = i;
}

std::vector<std::uint32_t> PointIndex::within(const Point& p, double radius) const {
  std::vector<std::uint32_t> out;
  if (points_.empty() || !(radius >= 0.0)) return out;
  const auto x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p.x() - radius - origin_.x()) / cell_)), 0, nx_ - 1);
  const auto x1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p.x() + radius - origin_.x()) / cell_)), 0, nx_ - 1);
  const auto y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p.y() - radius - origin_.y()) / cell_)), 0, ny_ - 1);
  const auto y1 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p.y() + radius - origin_.y()) / cell_)), 0, ny_ - 1);
  for (auto y = y0; y <= y1; ++y) {
    for (auto x = x0; x <= x1; ++x) {
      const auto b = static_cast<std::size_t>(y * nx_ + x);
      for (auto k = offsets_[b]; k < offsets_[b + 1]; ++k) {
        if (euclidean(points_[ids_[k]], p) <= radius) out.push_back(ids_[k]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

PairDistances assemble(std::size_t n_demand, std::vector<std::vector<std::pair<std::uint32_t, double>>>& cols) {
  PairDistances m(static_cast<std::int64_t>(n_demand), static_cast<std::int64_t>(cols.size()));
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> sizes(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) sizes[static_cast<Eigen::Index>(j)] = static_cast<std::int64_t>(cols[j].size());
  m.reserve(sizes);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (const auto& [i, d] : cols[j]) m.insert(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = d;
    cols[j] = {};
  }
  m.makeCompressed();
  return m;
}

}  // namespace

PairDistances euclidean_pair_distances(std::span<const Point> demand, std::span<const Point> supply, double cutoff) {
  if (!(cutoff > 0.0)) throw Error("euclidean_pair_distances: cutoff must be > 0");
  const PointIndex index(demand, cutoff / 4.0);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> cols(supply.size());
  parallel_for(supply.size(), [&](std::size_t j) {
    for (std::uint32_t i : index.within(supply[j], cutoff)) cols[j].emplace_back(i, euclidean(demand[i], supply[j]));
  });
  return assemble(demand.size(), cols);
}

PairDistances network_pair_distances(const PedestrianNetwork& net, std::span<const Point> demand,
                                     std::span<const SnapResult> demand_snaps, std::span<const Point> supply,
                                     std::span<const SnapResult> supply_snaps, double cutoff) {
  if (!(cutoff > 0.0)) throw Error("network_pair_distances: cutoff must be > 0");
  if (demand.size() != demand_snaps.size() || supply.size() != supply_snaps.size()) {
    throw Error("network_pair_distances: snaps must align with points");
  }
  double max_demand_offset = 0.0;
  for (const auto& s : demand_snaps) max_demand_offset = std::max(max_demand_offset, s.offset);

  // g + s_i + s_j <= cutoff needs g <= cutoff - s_j.
  std::vector<double> tree_cutoffs(supply.size());
  for (std::size_t j = 0; j < supply.size(); ++j) tree_cutoffs[j] = cutoff - supply_snaps[j].offset;
  const DistanceMatrixBlock trees = ShortestPathTrees(net).compute(supply_snaps, demand_snaps, tree_cutoffs);

  const PointIndex index(demand, cutoff / 4.0);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> cols(supply.size());
  parallel_for(supply.size(), [&](std::size_t j) {
    const double s_j = supply_snaps[j].offset;
    auto& col = cols[j];
    // Straight-line fallback candidates: e < s_i + s_j, so e < max s_i + s_j.
    const std::vector<std::uint32_t> near = index.within(supply[j], std::min(cutoff, s_j + max_demand_offset));
    auto tree_it = trees.targets.begin() + static_cast<std::ptrdiff_t>(trees.row_offsets[j]);
    const auto tree_end = trees.targets.begin() + static_cast<std::ptrdiff_t>(trees.row_offsets[j + 1]);
    auto near_it = near.begin();
    while (tree_it != tree_end || near_it != near.end()) {
      std::uint32_t i;
      double g = kUnreachable;
      if (near_it == near.end() || (tree_it != tree_end && *tree_it < *near_it)) {
        i = *tree_it;
        g = trees.distances[static_cast<std::size_t>(tree_it - trees.targets.begin())];
        ++tree_it;
      } else {
        i = *near_it;
        if (tree_it != tree_end && *tree_it == i) {
          g = trees.distances[static_cast<std::size_t>(tree_it - trees.targets.begin())];
          ++tree_it;
        }
        ++near_it;
      }
      const double d = pair_distance(euclidean(demand[i], supply[j]), demand_snaps[i].offset, s_j, g);
      if (d <= cutoff) col.emplace_back(i, d);
    }
  });
  return assemble(demand.size(), cols);
}

}  // namespace sfca
