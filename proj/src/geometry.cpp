#include "sfca/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sfca {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

Ring normalize_ring(Ring ring, const char* what) {
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  Ring out;
  out.reserve(ring.size() + 1);
  for (const auto& p : ring) {
    if (!p.allFinite()) throw Error(std::string(what) + " ring has a non-finite vertex");
    if (out.empty() || out.back() != p) out.push_back(p);
  }
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  if (out.size() < 3) throw Error(std::string(what) + " ring has fewer than 3 distinct vertices");
  out.push_back(out.front());
  return out;
}

// Orientation of c relative to a->b: +1 left, -1 right, 0 collinear.
int orient(const Point& a, const Point& b, const Point& c) {
  const double v = cross(b - a, c - a);
  return (v > 0) - (v < 0);
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_touch(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool ring_contains(const Ring& ring, const Point& p) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Point& a = ring[i];
    const Point& b = ring[i + 1];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const double t = project_to_segment(p, a, b);
  return euclidean(p, a + t * (b - a));
}

enum class Side { kOutside, kInside, kBoundarySame, kBoundaryOpposite };

Side classify(const Polygon& poly, const Point& m, const Point& dir, double eps) {
  Side side = Side::kOutside;
  bool on_boundary = false;
  poly.for_each_edge([&](const Point& a, const Point& b) {
    if (on_boundary) return;
    if (distance_to_segment(m, a, b) <= eps) {
      on_boundary = true;
      side = dir.dot(b - a) > 0 ? Side::kBoundarySame : Side::kBoundaryOpposite;
    }
  });
  if (on_boundary) return side;
  return poly.contains(m) ? Side::kInside : Side::kOutside;
}

BBox2 segment_bbox(const Point& a, const Point& b, double pad) {
  BBox2 box;
  box.extend(a);
  box.extend(b);
  box.min.array() -= pad;
  box.max.array() += pad;
  return box;
}

}  // namespace

double signed_ring_area(std::span<const Point> ring) {
  if (ring.empty()) return 0.0;
  const Point origin = ring.front();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) sum += cross(ring[i] - origin, ring[i + 1] - origin);
  return 0.5 * sum;
}

bool ring_is_simple(std::span<const Point> ring) {
  const std::size_t n = ring.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges share a vertex; they may only overlap if folded back.
        const Point& shared = (j == i + 1) ? ring[j] : ring[i];
        const Point& pi = (j == i + 1) ? ring[i] : ring[i + 1];
        const Point& pj = (j == i + 1) ? ring[j + 1] : ring[j];
        if (orient(pi, shared, pj) == 0 && (pi - shared).dot(pj - shared) > 0) return false;
        continue;
      }
      if (segments_touch(ring[i], ring[i + 1], ring[j], ring[j + 1])) return false;
    }
  }
  return true;
}

double project_to_segment(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return 0.0;
  return std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
}

Polygon::Polygon(Ring exterior, std::vector<Ring> holes) {
  exterior_ = normalize_ring(std::move(exterior), "exterior");
  if (!ring_is_simple(exterior_)) throw Error("exterior ring is self-intersecting");
  if (signed_ring_area(exterior_) < 0) std::reverse(exterior_.begin(), exterior_.end());
  area_ = signed_ring_area(exterior_);
  for (auto& h : holes) {
    Ring ring = normalize_ring(std::move(h), "interior");
    if (signed_ring_area(ring) > 0) std::reverse(ring.begin(), ring.end());
    area_ += signed_ring_area(ring);
    holes_.push_back(std::move(ring));
  }
  if (!(area_ > 0.0)) throw Error("polygon has non-positive area");
  for (const auto& p : exterior_) bbox_.extend(p);
}

Polygon Polygon::rectangle(const Point& min, const Point& max) {
  return Polygon(Ring{min, {max.x(), min.y()}, max, {min.x(), max.y()}, min});
}

bool Polygon::contains(const Point& p) const {
  if (empty() || !bbox_.contains(p)) return false;
  if (!ring_contains(exterior_, p)) return false;
  return std::none_of(holes_.begin(), holes_.end(),
                      [&](const Ring& h) { return ring_contains(h, p); });
}

double intersection_area(std::span<const Polygon* const> polys) {
  if (polys.empty()) return 0.0;
  for (const Polygon* p : polys) {
    if (p == nullptr || p->empty()) throw Error("intersection_area: invalid polygon");
  }
  if (polys.size() == 1) return polys[0]->area();

  BBox2 common = polys[0]->bbox();
  double scale = 1.0;
  for (const Polygon* p : polys) {
    common = common.intersection(p->bbox());
    scale = std::max({scale, p->bbox().min.cwiseAbs().maxCoeff(), p->bbox().max.cwiseAbs().maxCoeff()});
  }
  if (common.empty()) return 0.0;
  const double eps = 1e-11 * scale;
  // Shoelace terms are taken about a local origin to avoid cancellation at
  // large projected coordinates; the intersection boundary is closed.
  const Point origin = 0.5 * (common.min + common.max);
  common.min.array() -= eps;
  common.max.array() += eps;

  double twice_area = 0.0;
  std::vector<double> cuts;
  for (std::size_t xi = 0; xi < polys.size(); ++xi) {
    const Polygon& x = *polys[xi];
    x.for_each_edge([&](const Point& a, const Point& b) {
      const BBox2 ebox = segment_bbox(a, b, eps);
      if (!ebox.intersects(common)) return;
      const Point r = b - a;
      const double len = r.norm();
      cuts.assign({0.0, 1.0});
      for (std::size_t yi = 0; yi < polys.size(); ++yi) {
        if (yi == xi) continue;
        polys[yi]->for_each_edge([&](const Point& c, const Point& d) {
          if (!ebox.intersects(segment_bbox(c, d, eps))) return;
          for (const Point* q : {&c, &d}) {
            if (distance_to_segment(*q, a, b) <= eps) cuts.push_back(project_to_segment(*q, a, b));
          }
          const Point s = d - c;
          const double denom = cross(r, s);
          if (std::abs(denom) <= 1e-14 * len * s.norm()) return;
          const double t = cross(c - a, s) / denom;
          const double u = cross(c - a, r) / denom;
          if (t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0) cuts.push_back(t);
        });
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const Point p0 = a + cuts[k] * r;
        const Point p1 = a + cuts[k + 1] * r;
        if ((p1 - p0).norm() <= eps) continue;
        const Point mid = 0.5 * (p0 + p1);
        bool keep = true;
        for (std::size_t yi = 0; yi < polys.size() && keep; ++yi) {
          if (yi == xi) continue;
          switch (classify(*polys[yi], mid, r, eps)) {
            case Side::kInside: break;
            case Side::kBoundarySame: keep = xi < yi; break;
            case Side::kOutside:
            case Side::kBoundaryOpposite: keep = false; break;
          }
        }
        if (keep) twice_area += cross(p0 - origin, p1 - origin);
      }
    });
  }
  return std::max(0.0, 0.5 * twice_area);
}

}  // namespace sfca
