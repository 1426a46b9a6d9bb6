#include "sfca/network.hpp"
#include "support/oracles.hpp"
#include "support/random_graphs.hpp"

#include <doctest.h>

#include <bit>
#include <random>

using namespace sfca;

namespace {

SnapResult brute_snap(const PedestrianNetwork& net, const Point& p) {
  SnapResult best;
  double bd = kUnreachable;
  for (EdgeId id = 0; id < net.edge_count(); ++id) {
    const Edge& e = net.edges()[id];
    const Point a = net.vertices()[e.u], b = net.vertices()[e.v];
    const Point ab = b - a;
    double t = ab.dot(p - a) / ab.squaredNorm();
    t = std::clamp(t, 0.0, 1.0);
    const Point foot = a + t * ab;
    const double d = euclidean(p, foot);
    if (d < bd) {
      bd = d;
      best = {id, t * e.length, foot, d};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("network construction examples") {
  const std::vector<Polyline> two{{{0, 0}, {1, 0}}, {{1, 0}, {1, 2}}};
  const NetworkBuild a = build_network(two, 0.5);
  CHECK(a.network.vertex_count() == 3);
  CHECK(a.network.edge_count() == 2);
  CHECK(a.merged_points == 1);

  const std::vector<Polyline> near{{{0, 0}, {5, 0}}, {{5.01, 0}, {5, 7}}};
  const NetworkBuild b = build_network(near, 0.1);
  CHECK(b.network.vertex_count() == 3);
  const NetworkBuild b0 = build_network(near, 0.0);
  CHECK(b0.network.vertex_count() == 4);

  const std::vector<Polyline> ell{{{0, 0}, {3, 0}, {3, 4}}};
  const NetworkBuild c = build_network(ell, 0.5);
  REQUIRE(c.network.edge_count() == 2);
  CHECK(c.network.edges()[0].length == 3.0);
  CHECK(c.network.edges()[1].length == 4.0);

  const std::vector<Polyline> degenerate{{{0, 0}, {0.2, 0}, {4, 0}}};
  const NetworkBuild d = build_network(degenerate, 0.5);
  CHECK(d.network.edge_count() == 1);
  CHECK(d.dropped_edges == 1);

  CHECK_THROWS_AS(build_network(std::vector<Polyline>{}, 0.5), Error);
  CHECK_THROWS_AS(build_network(ell, -1.0), Error);
  CHECK_THROWS_AS(build_network(std::vector<Polyline>{{{0, 0}, {0.1, 0}}}, 0.5), Error);
}

TEST_CASE("snap examples") {
  const std::vector<Polyline> one{{{0, 0}, {2, 0}}};
  const PedestrianNetwork net = build_network(one, 0.5).network;
  const SnapResult on = net.snap({1, 0});
  CHECK(on.offset == 0.0);
  CHECK(on.position == 1.0);
  const SnapResult above = net.snap({0, 1});
  CHECK(above.offset == 1.0);
  CHECK(above.position == 0.0);
  CHECK(net.anchor_vertex(above).value() == 0u);

  // Equidistant to two parallel edges: lowest id wins.
  const std::vector<Polyline> par{{{0, 2}, {4, 2}}, {{0, 0}, {4, 0}}};
  const PedestrianNetwork pn = build_network(par, 0.5).network;
  CHECK(pn.snap({2, 1}).edge == 0u);

  CHECK_THROWS_AS(PedestrianNetwork().snap({0, 0}), Error);
}

TEST_CASE("snap matches brute force over all edges") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const PedestrianNetwork net = testgen::random_network(rng, 200, 1000.0);
    std::uniform_real_distribution<double> u(-200, 1200);
    for (int i = 0; i < 300; ++i) {
      const Point p(u(rng), u(rng));
      const SnapResult got = net.snap(p);
      const SnapResult want = brute_snap(net, p);
      CHECK(got.offset == doctest::Approx(want.offset).epsilon(1e-12));
      CHECK(got.position >= 0.0);
      CHECK(got.position <= net.edges()[got.edge].length);
    }
  }
}

TEST_CASE("shortest path tree examples") {
  // Path A-B-C with lengths 2 and 3.
  const PedestrianNetwork net({{0, 0}, {2, 0}, {5, 0}}, {{0, 1, 2.0}, {1, 2, 3.0}});
  const std::vector<SnapResult> src{{0, 0.0, {0, 0}, 0.0}};
  const std::vector<SnapResult> tgt{{0, 0.0, {0, 0}, 0.0}, {1, 3.0, {5, 0}, 0.0}, {1, 1.0, {3, 0}, 0.0}};
  const DistanceMatrixBlock m = shortest_path_trees(net, src, tgt, 100.0);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(0, 1) == 5.0);
  CHECK(m.at(0, 2) == 3.0);
  const DistanceMatrixBlock cut = shortest_path_trees(net, src, tgt, 4.0);
  CHECK(cut.at(0, 1) == kUnreachable);
  CHECK(cut.at(0, 2) == 3.0);
  CHECK(cut.row_size(0) == 2);
  CHECK_THROWS_AS(shortest_path_trees(net, src, tgt, 0.0), Error);

  // Disconnected component is unreachable.
  const PedestrianNetwork two({{0, 0}, {1, 0}, {10, 0}, {11, 0}}, {{0, 1, 1.0}, {2, 3, 1.0}});
  const std::vector<SnapResult> far{{1, 0.5, {10.5, 0}, 0.0}};
  CHECK(shortest_path_trees(two, src, far, 1e9).at(0, 0) == kUnreachable);
}

TEST_CASE("shortest path trees equal naive Dijkstra bit for bit") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const bool ints = trial % 3 == 0;  // integer lengths create many exact ties
    const PedestrianNetwork net = testgen::random_network(rng, 50 + 10 * trial, 1000.0, ints);
    const auto sources = testgen::random_anchors(rng, net, 12);
    const auto targets = testgen::random_anchors(rng, net, 60);
    const double cutoff = trial % 2 ? 400.0 : 1e9;
    const DistanceMatrixBlock m = shortest_path_trees(net, sources, targets, cutoff);
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const auto want = oracle::dijkstra_targets(net, sources[s], targets, cutoff);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        CHECK(std::bit_cast<std::uint64_t>(m.at(s, t)) == std::bit_cast<std::uint64_t>(want[t]));
      }
    }
  }
}

TEST_CASE("tree distances are symmetric and satisfy the triangle inequality") {
  std::mt19937_64 rng(23);
  const PedestrianNetwork net = testgen::random_network(rng, 120, 500.0);
  const auto pts = testgen::random_anchors(rng, net, 30);
  const DistanceMatrixBlock m = shortest_path_trees(net, pts, pts, 1e9);
  for (std::size_t a = 0; a < pts.size(); ++a) {
    CHECK(m.at(a, a) == 0.0);
    for (std::size_t b = 0; b < pts.size(); ++b) {
      CHECK(m.at(a, b) == doctest::Approx(m.at(b, a)).epsilon(1e-12));
      for (std::size_t c = 0; c < pts.size(); ++c) {
        if (m.at(a, b) == kUnreachable || m.at(b, c) == kUnreachable) continue;
        CHECK(m.at(a, c) <= m.at(a, b) + m.at(b, c) + 1e-9);
      }
    }
  }
}

TEST_CASE("adding an edge never increases a distance") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const PedestrianNetwork net = testgen::random_network(rng, 80, 500.0);
    const auto pts = testgen::random_anchors(rng, net, 20);
    std::vector<Edge> edges = net.edges();
    std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(net.vertex_count() - 1));
    const VertexId a = pick(rng), b = pick(rng);
    if (a == b) continue;
    edges.push_back({a, b, euclidean(net.vertices()[a], net.vertices()[b])});
    const PedestrianNetwork more(net.vertices(), edges);
    const auto before = shortest_path_trees(net, pts, pts, 1e9);
    const auto after = shortest_path_trees(more, pts, pts, 1e9);
    for (std::size_t s = 0; s < pts.size(); ++s)
      for (std::size_t t = 0; t < pts.size(); ++t) CHECK(after.at(s, t) <= before.at(s, t));
  }
}

TEST_CASE("per-vertex distances") {
  const PedestrianNetwork net({{0, 0}, {2, 0}, {5, 0}}, {{0, 1, 2.0}, {1, 2, 3.0}});
  const auto d = ShortestPathTrees(net).vertex_distances({0, 0.5, {0.5, 0}, 0.0}, 3.0);
  CHECK(d[0] == 0.5);
  CHECK(d[1] == 1.5);
  CHECK(d[2] == kUnreachable);
}

TEST_CASE("offset and straight-line fallback rule") {
  CHECK(pair_distance(80, 0, 0, 100) == 100);
  CHECK(pair_distance(200, 5, 7, 100) == 112);
  CHECK(pair_distance(10, 5, 7, 100) == 10);
  CHECK(pair_distance(10, 5, 7, kUnreachable) == 10);
  CHECK(pair_distance(20, 5, 7, kUnreachable) == kUnreachable);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 1000; ++i) {
    const double si = u(rng), sj = u(rng), g = 3 * u(rng), e = 2 * u(rng);
    const double d = pair_distance(e, si, sj, g);
    CHECK(d <= g + si + sj);
    CHECK(d >= std::min(e, g));
  }
}

TEST_CASE("point index radius queries") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<Point> pts(500);
  for (auto& p : pts) p = Point(u(rng), u(rng));
  const PointIndex idx(pts, 50.0);
  for (int q = 0; q < 100; ++q) {
    const Point c(u(rng), u(rng));
    const double r = u(rng) / 4;
    std::vector<std::uint32_t> want;
    for (std::uint32_t i = 0; i < pts.size(); ++i)
      if (euclidean(pts[i], c) <= r) want.push_back(i);
    CHECK(idx.within(c, r) == want);
  }
}

TEST_CASE("pair tables match a brute-force evaluation") {
  std::mt19937_64 rng(41);
  const PedestrianNetwork net = testgen::random_network(rng, 150, 800.0);
  std::uniform_real_distribution<double> u(-50, 850);
  std::vector<Point> demand(80), supply(25);
  for (auto& p : demand) p = Point(u(rng), u(rng));
  for (auto& p : supply) p = Point(u(rng), u(rng));
  std::vector<SnapResult> ds(demand.size()), ss(supply.size());
  for (std::size_t i = 0; i < demand.size(); ++i) ds[i] = net.snap(demand[i]);
  for (std::size_t j = 0; j < supply.size(); ++j) ss[j] = net.snap(supply[j]);
  const double cutoff = 300.0;

  const PairDistances eu = euclidean_pair_distances(demand, supply, cutoff);
  const PairDistances nw = network_pair_distances(net, demand, ds, supply, ss, cutoff);
  for (std::size_t j = 0; j < supply.size(); ++j) {
    std::vector<SnapResult> t(ds);
    const auto g = oracle::dijkstra_targets(net, ss[j], t, 1e18);
    for (std::size_t i = 0; i < demand.size(); ++i) {
      const double e = euclidean(demand[i], supply[j]);
      const auto ii = static_cast<std::int64_t>(i), jj = static_cast<std::int64_t>(j);
      // Euclidean table: stored exactly when within the cutoff.
      const bool stored_e = eu.coeff(ii, jj) != 0.0 || (e == 0.0);
      if (e <= cutoff) {
        CHECK(eu.coeff(ii, jj) == e);
      } else {
        CHECK_FALSE(stored_e);
      }
      const double want = pair_distance(e, ds[i].offset, ss[j].offset, g[i]);
      if (want <= cutoff) {
        CHECK(nw.coeff(ii, jj) == want);
      } else {
        CHECK(nw.coeff(ii, jj) == 0.0);
      }
    }
  }
}
