#include "sfca/geojson.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>

namespace sfca {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
}

// Features of a FeatureCollection, a single Feature, or a bare geometry.
std::vector<json> features_of(const json& doc, const std::filesystem::path& path) {
  if (!doc.is_object() || !doc.contains("type")) throw Error(path.string() + ": not a GeoJSON object");
  const std::string type = doc["type"].get<std::string>();
  if (type == "FeatureCollection") {
    if (!doc.contains("features") || !doc["features"].is_array()) throw Error(path.string() + ": missing features array");
    return doc["features"].get<std::vector<json>>();
  }
  if (type == "Feature") return {doc};
  return {json{{"type", "Feature"}, {"geometry", doc}, {"properties", json::object()}}};
}

class FeatureContext {
 public:
  FeatureContext(const std::filesystem::path& path, std::size_t index, const json& feature, const char* id_key)
      : path_(path), index_(index) {
    const json* props = properties(feature);
    if (props && id_key && props->contains(id_key)) {
      const json& id = (*props)[id_key];
      label_ = id.is_string() ? id.get<std::string>() : id.dump();
    } else if (feature.contains("id")) {
      const json& id = feature["id"];
      label_ = id.is_string() ? id.get<std::string>() : id.dump();
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::string where = path_.string() + ": feature " + std::to_string(index_);
    if (!label_.empty()) where += " ('" + label_ + "')";
    throw Error(where + ": " + msg);
  }

  static const json* properties(const json& feature) {
    auto it = feature.find("properties");
    if (it == feature.end() || !it->is_object()) return nullptr;
    return &*it;
  }

 private:
  const std::filesystem::path& path_;
  std::size_t index_;
  std::string label_;
};

Point parse_position(const json& p, const FeatureContext& ctx) {
  if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) ctx.fail("malformed coordinate");
  const Point q(p[0].get<double>(), p[1].get<double>());
  if (!q.allFinite()) ctx.fail("non-finite coordinate");
  return q;
}

Ring parse_ring(const json& r, const FeatureContext& ctx) {
  if (!r.is_array()) ctx.fail("malformed ring");
  Ring ring;
  ring.reserve(r.size());
  for (const auto& p : r) ring.push_back(parse_position(p, ctx));
  return ring;
}

Polygon parse_polygon_coords(const json& c, const FeatureContext& ctx) {
  if (!c.is_array() || c.empty()) ctx.fail("polygon needs at least one ring");
  Ring outer = parse_ring(c[0], ctx);
  std::vector<Ring> holes;
  for (std::size_t i = 1; i < c.size(); ++i) holes.push_back(parse_ring(c[i], ctx));
  try {
    return Polygon(std::move(outer), std::move(holes));
  } catch (const Error& e) {
    ctx.fail(e.what());
  }
}

const json& geometry_of(const json& f, const FeatureContext& ctx) {
  auto it = f.find("geometry");
  if (it == f.end() || !it->is_object() || !it->contains("type")) ctx.fail("missing geometry");
  if (!it->contains("coordinates")) ctx.fail("geometry has no coordinates");
  return *it;
}

std::vector<Polygon> parse_polygons(const json& g, const FeatureContext& ctx, bool allow_multi) {
  const std::string type = g["type"].get<std::string>();
  if (type == "Polygon") return {parse_polygon_coords(g["coordinates"], ctx)};
  if (type == "MultiPolygon" && allow_multi) {
    std::vector<Polygon> out;
    for (const auto& c : g["coordinates"]) out.push_back(parse_polygon_coords(c, ctx));
    return out;
  }
  ctx.fail("expected Polygon geometry, got " + type);
}

const json& required_property(const json& f, const char* key, const FeatureContext& ctx) {
  const json* props = FeatureContext::properties(f);
  if (!props || !props->contains(key)) ctx.fail(std::string("missing property '") + key + "'");
  return (*props)[key];
}

double number_property(const json& v, const char* key, const FeatureContext& ctx) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return parse_number(v.get<std::string>());
    } catch (const Error&) {
    }
  }
  ctx.fail(std::string("property '") + key + "' is not a number");
}

std::string string_property(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::vector<Camp> load_camps(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto feats = features_of(doc, path);
  std::vector<Camp> camps;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const json& f = feats[i];
    const FeatureContext ctx(path, i, f, "camp_id");
    Camp c;
    c.camp_id = string_property(required_property(f, "camp_id", ctx));
    if (!seen.insert(c.camp_id).second) ctx.fail("duplicate camp_id");
    auto polys = parse_polygons(geometry_of(f, ctx), ctx, false);
    c.boundary = std::move(polys.front());
    const json* props = FeatureContext::properties(f);
    auto opt_number = [&](const char* key) -> double {
      if (!props->contains(key) || (*props)[key].is_null()) return 0.0;
      const double v = number_property((*props)[key], key, ctx);
      if (!(v >= 0.0) || !std::isfinite(v)) ctx.fail(std::string("property '") + key + "' must be >= 0");
      return v;
    };
    c.pop_total = opt_number("pop_total");
    c.pop_female = opt_number("pop_female");
    c.pop_male = opt_number("pop_male");
    camps.push_back(std::move(c));
  }
  return camps;
}

void apply_population_csv(std::vector<Camp>& camps, const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t id = t.column("camp_id");
  const std::size_t total = t.column("pop_total");
  const auto female = t.find_column("pop_female");
  const auto male = t.find_column("pop_male");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < camps.size(); ++i) index[camps[i].camp_id] = i;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto it = index.find(t.rows[r][id]);
    if (it == index.end())
      throw Error(path.string() + ": line " + std::to_string(r + 2) + ": unknown camp_id '" + t.rows[r][id] + "'");
    Camp& c = camps[it->second];
    auto nonneg = [&](std::size_t col) {
      const double v = t.number(r, col);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(path.string() + ": line " + std::to_string(r + 2) + ": population must be >= 0");
      return v;
    };
    c.pop_total = nonneg(total);
    c.pop_female = female ? nonneg(*female) : 0.0;
    c.pop_male = male ? nonneg(*male) : 0.0;
  }
}

std::vector<Facility> load_facilities(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto feats = features_of(doc, path);
  std::vector<Facility> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const json& f = feats[i];
    const FeatureContext ctx(path, i, f, "facility_id");
    Facility fac;
    const json* props = FeatureContext::properties(f);
    if (props && props->contains("facility_id")) {
      fac.facility_id = string_property((*props)["facility_id"]);
    } else if (f.contains("id")) {
      fac.facility_id = string_property(f["id"]);
    } else {
      fac.facility_id = std::to_string(i);
    }
    if (!seen.insert(fac.facility_id).second) ctx.fail("duplicate facility_id");
    const json& g = geometry_of(f, ctx);
    if (g["type"] != "Point") ctx.fail("expected Point geometry, got " + g["type"].get<std::string>());
    fac.location = parse_position(g["coordinates"], ctx);

    const json& kind = required_property(f, "kind", ctx);
    if (!kind.is_string()) ctx.fail("property 'kind' must be a string");
    const auto k = parse_facility_kind(kind.get<std::string>());
    if (!k) ctx.fail("unknown facility kind '" + kind.get<std::string>() + "'");
    fac.kind = *k;

    if (props->contains("gender") && !(*props)["gender"].is_null()) {
      const json& g2 = (*props)["gender"];
      if (!g2.is_string()) ctx.fail("property 'gender' must be a string");
      const auto gd = parse_gender(g2.get<std::string>());
      if (!gd) ctx.fail("unknown gender designation '" + g2.get<std::string>() + "'");
      fac.gender = *gd;
    }

    fac.capacity = 1.0;
    if (props->contains("count") && !(*props)["count"].is_null()) {
      const double count = number_property((*props)["count"], "count", ctx);
      if (!(count >= 1.0) || count != std::floor(count) || !std::isfinite(count))
        ctx.fail("property 'count' must be an integer >= 1");
      fac.capacity = count;
    }
    out.push_back(std::move(fac));
  }
  return out;
}

std::vector<Polyline> load_footpaths(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto feats = features_of(doc, path);
  std::vector<Polyline> out;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const json& f = feats[i];
    const FeatureContext ctx(path, i, f, nullptr);
    const json& g = geometry_of(f, ctx);
    const std::string type = g["type"].get<std::string>();
    auto line = [&](const json& c) {
      if (!c.is_array()) ctx.fail("malformed LineString");
      Polyline pl;
      for (const auto& p : c) pl.push_back(parse_position(p, ctx));
      if (pl.size() < 2) ctx.fail("LineString needs at least two positions");
      out.push_back(std::move(pl));
    };
    if (type == "LineString") {
      line(g["coordinates"]);
    } else if (type == "MultiLineString") {
      for (const auto& c : g["coordinates"]) line(c);
    } else {
      ctx.fail("expected LineString geometry, got " + type);
    }
  }
  return out;
}

std::vector<Polygon> load_polygons(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto feats = features_of(doc, path);
  std::vector<Polygon> out;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const FeatureContext ctx(path, i, feats[i], nullptr);
    for (auto& p : parse_polygons(geometry_of(feats[i], ctx), ctx, true)) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Block> load_blocks(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto feats = features_of(doc, path);
  std::vector<Block> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const json& f = feats[i];
    const FeatureContext ctx(path, i, f, "block_id");
    Block b;
    b.block_id = string_property(required_property(f, "block_id", ctx));
    if (!seen.insert(b.block_id).second) ctx.fail("duplicate block_id");
    b.boundary = std::move(parse_polygons(geometry_of(f, ctx), ctx, false).front());
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

// Values stored as their 9-digit rounding so CSV and GeoJSON agree.
ojson number_value(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_trip(v);
}

ojson cell_geometry(const GridCell& c, double cell_size) {
  const double h = 0.5 * cell_size;
  const double x0 = round_trip(c.centroid.x() - h);
  const double x1 = round_trip(c.centroid.x() + h);
  const double y0 = round_trip(c.centroid.y() - h);
  const double y1 = round_trip(c.centroid.y() + h);
  return ojson{{"type", "Polygon"},
               {"coordinates", ojson::array({ojson::array({ojson::array({x0, y0}), ojson::array({x1, y0}),
                                                           ojson::array({x1, y1}), ojson::array({x0, y1}),
                                                           ojson::array({x0, y0})})})}};
}

ojson cell_properties(const GridCell& c) {
  ojson p = ojson::object();
  p["cell_id"] = c.cell_id;
  p["row"] = c.row;
  p["col"] = c.col;
  p["x"] = number_value(c.centroid.x());
  p["y"] = number_value(c.centroid.y());
  return p;
}

}  // namespace

std::string field_geojson(const AccessField& field, const PopulationField& population, double cell_size) {
  ojson feats = ojson::array();
  for (std::size_t r = 0; r < field.cells.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    ojson p = cell_properties(field.cells[r]);
    p["pop_total"] = number_value(population.total[i]);
    p["pop_female"] = number_value(population.female[i]);
    p["pop_male"] = number_value(population.male[i]);
    p["A_water"] = number_value(field.by_kind(i, 0));
    p["A_latrine"] = number_value(field.by_kind(i, 1));
    p["A_bath"] = number_value(field.by_kind(i, 2));
    p["A_mean"] = number_value(field.mean[i]);
    feats.push_back(ojson{{"type", "Feature"}, {"properties", std::move(p)}, {"geometry", cell_geometry(field.cells[r], cell_size)}});
  }
  ojson doc{{"type", "FeatureCollection"}, {"scenario", field.scenario}, {"features", std::move(feats)}};
  return doc.dump() + "\n";
}

std::string change_geojson(const FieldChange& change, double cell_size) {
  ojson feats = ojson::array();
  for (std::size_t r = 0; r < change.cells.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    ojson p = cell_properties(change.cells[r]);
    p["dA_water"] = number_value(change.by_kind(i, 0));
    p["dA_latrine"] = number_value(change.by_kind(i, 1));
    p["dA_bath"] = number_value(change.by_kind(i, 2));
    p["dA_mean"] = number_value(change.mean[i]);
    feats.push_back(ojson{{"type", "Feature"}, {"properties", std::move(p)}, {"geometry", cell_geometry(change.cells[r], cell_size)}});
  }
  ojson doc{{"type", "FeatureCollection"}, {"features", std::move(feats)}};
  return doc.dump() + "\n";
}

FieldTable read_field_geojson(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto feats = features_of(doc, path);
  CsvTable t;
  t.source = path;
  t.header = kFieldColumns;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const FeatureContext ctx(path, i, feats[i], "cell_id");
    std::vector<std::string> row;
    for (const auto& name : kFieldColumns) {
      const json& v = required_property(feats[i], name.c_str(), ctx);
      if (v.is_null()) {
        row.emplace_back("nan");
      } else if (v.is_number_integer()) {
        row.push_back(v.dump());
      } else {
        row.push_back(format_number(number_property(v, name.c_str(), ctx)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  FieldTable out = field_table_from_csv(t);
  if (doc.contains("scenario") && doc["scenario"].is_string()) out.field.scenario = doc["scenario"].get<std::string>();
  return out;
}

}  // namespace sfca
