#pragma once

#include "sfca/accessibility.hpp"
#include "sfca/demography.hpp"
#include "sfca/network.hpp"
#include "sfca/tabular.hpp"

#include <json.hpp>

#include <string>
#include <vector>

// GeoJSON text for in-memory layers, used to drive the file-based pipeline.
namespace fixture {

using nlohmann::ordered_json;

inline ordered_json position(const sfca::Point& p) { return ordered_json::array({p.x(), p.y()}); }

inline ordered_json ring_json(const sfca::Ring& r) {
  ordered_json a = ordered_json::array();
  for (const auto& p : r) a.push_back(position(p));
  a.push_back(position(r.front()));
  return a;
}

inline ordered_json polygon_json(const sfca::Polygon& poly) {
  ordered_json rings = ordered_json::array({ring_json(poly.exterior())});
  for (const auto& h : poly.holes()) rings.push_back(ring_json(h));
  return {{"type", "Polygon"}, {"coordinates", rings}};
}

inline ordered_json feature(ordered_json props, ordered_json geometry) {
  return {{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", std::move(geometry)}};
}

inline std::string collection(const std::vector<ordered_json>& feats) {
  ordered_json doc = {{"type", "FeatureCollection"}, {"features", feats}};
  return doc.dump();
}

inline std::string camps_geojson(const std::vector<sfca::Camp>& camps) {
  std::vector<ordered_json> f;
  for (const auto& c : camps)
    f.push_back(feature({{"camp_id", c.camp_id}, {"pop_total", c.pop_total}, {"pop_female", c.pop_female}, {"pop_male", c.pop_male}},
                        polygon_json(c.boundary)));
  return collection(f);
}

inline std::string polygons_geojson(const std::vector<sfca::Polygon>& polys) {
  std::vector<ordered_json> f;
  for (const auto& p : polys) f.push_back(feature(ordered_json::object(), polygon_json(p)));
  return collection(f);
}

inline std::string blocks_geojson(const std::vector<sfca::Block>& blocks) {
  std::vector<ordered_json> f;
  for (const auto& b : blocks) f.push_back(feature({{"block_id", b.block_id}}, polygon_json(b.boundary)));
  return collection(f);
}

inline std::string facilities_geojson(const std::vector<sfca::Facility>& fac) {
  std::vector<ordered_json> f;
  for (const auto& x : fac) {
    ordered_json props = {{"facility_id", x.facility_id}, {"kind", std::string(sfca::to_string(x.kind))},
                          {"count", static_cast<int>(x.capacity)}};
    if (x.gender) props["gender"] = std::string(sfca::to_string(*x.gender));
    f.push_back(feature(props, {{"type", "Point"}, {"coordinates", position(x.location)}}));
  }
  return collection(f);
}

inline std::string footpaths_geojson(const std::vector<sfca::Polyline>& lines) {
  std::vector<ordered_json> f;
  for (const auto& l : lines) {
    ordered_json c = ordered_json::array();
    for (const auto& p : l) c.push_back(position(p));
    f.push_back(feature(ordered_json::object(), {{"type", "LineString"}, {"coordinates", c}}));
  }
  return collection(f);
}

}  // namespace fixture
