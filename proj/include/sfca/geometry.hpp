#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfca {

/// Library-wide error type. Messages name the offending input where possible.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar point in a projected metric CRS (meters).
using Point = Eigen::Vector2d;

/// Closed ring: first vertex equals last vertex.
using Ring = std::vector<Point>;

struct BBox2 {
  Point min{Point::Constant(std::numeric_limits<double>::infinity())};
  Point max{Point::Constant(-std::numeric_limits<double>::infinity())};

  void extend(const Point& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const BBox2& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  [[nodiscard]] bool empty() const { return (min.array() > max.array()).any(); }
  [[nodiscard]] bool intersects(const BBox2& o) const {
    return !empty() && !o.empty() && (min.array() <= o.max.array()).all() &&
           (o.min.array() <= max.array()).all();
  }
  [[nodiscard]] BBox2 intersection(const BBox2& o) const {
    return BBox2{min.cwiseMax(o.min), max.cwiseMin(o.max)};
  }
  [[nodiscard]] bool contains(const Point& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Simple polygon with optional holes.
///
/// Rings are stored closed. The exterior is normalized to counter-clockwise
/// and every interior ring to clockwise, so the signed shoelace sum over all
/// rings is the polygon area. Construction validates closure (an open ring
/// is closed automatically), finiteness, at least three distinct vertices,
/// a non-self-intersecting exterior and positive area; violations throw.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(Ring exterior, std::vector<Ring> holes = {});

  /// Axis-aligned rectangle [min, max].
  static Polygon rectangle(const Point& min, const Point& max);

  [[nodiscard]] const Ring& exterior() const { return exterior_; }
  [[nodiscard]] const std::vector<Ring>& holes() const { return holes_; }
  [[nodiscard]] double area() const { return area_; }
  [[nodiscard]] const BBox2& bbox() const { return bbox_; }
  [[nodiscard]] bool empty() const { return exterior_.empty(); }

  /// Crossing-number containment with holes. Boundary points follow the
  /// half-open rule of the crossing test and are not guaranteed either way.
  [[nodiscard]] bool contains(const Point& p) const;

  /// Visit every directed boundary edge (a, b) of all rings.
  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    auto ring_edges = [&](const Ring& r) {
      for (std::size_t i = 0; i + 1 < r.size(); ++i) fn(r[i], r[i + 1]);
    };
    ring_edges(exterior_);
    for (const auto& h : holes_) ring_edges(h);
  }

 private:
  Ring exterior_;
  std::vector<Ring> holes_;
  double area_ = 0.0;
  BBox2 bbox_;
};

/// Signed shoelace area of a closed ring (positive when counter-clockwise).
[[nodiscard]] double signed_ring_area(std::span<const Point> ring);

/// True when the closed ring has no two non-adjacent edges that touch.
[[nodiscard]] bool ring_is_simple(std::span<const Point> ring);

[[nodiscard]] inline double euclidean(const Point& a, const Point& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

/// Area of the common intersection of all polygons in `polys`.
///
/// Boundary-integral formulation: each boundary piece of one polygon that
/// lies inside every other polygon contributes its shoelace term. Pieces on
/// a shared boundary count once, from the lowest-index polygon, and only
/// when the coincident edges run in the same direction.
[[nodiscard]] double intersection_area(std::span<const Polygon* const> polys);

[[nodiscard]] inline double intersection_area(const Polygon& a, const Polygon& b) {
  const Polygon* ps[] = {&a, &b};
  return intersection_area(ps);
}

[[nodiscard]] inline double intersection_area(const Polygon& a, const Polygon& b,
                                              const Polygon& c) {
  const Polygon* ps[] = {&a, &b, &c};
  return intersection_area(ps);
}

/// Closest point on segment [a, b] to p, returned as the clamped parameter.
[[nodiscard]] double project_to_segment(const Point& p, const Point& a, const Point& b);

}  // namespace sfca
