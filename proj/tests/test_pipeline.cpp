#include "sfca/cli.hpp"
#include "sfca/geojson.hpp"
#include "sfca/mask_io.hpp"
#include "sfca/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <sstream>

using namespace sfca;

namespace {

// Projected-looking coordinates so the degree check stays quiet.
constexpr double kX0 = 500000.0;
constexpr double kY0 = 2300000.0;

Point at(double x, double y) { return {kX0 + x, kY0 + y}; }

Polygon square(double x0, double y0, double x1, double y1) { return Polygon::rectangle(at(x0, y0), at(x1, y1)); }

Facility facility(std::string id, Point p, FacilityKind k = FacilityKind::kLatrine,
                  std::optional<GenderDesignation> g = std::nullopt, double count = 1) {
  return {std::move(id), p, k, count, g};
}

struct Scene {
  std::vector<Camp> camps;
  std::vector<Polygon> shelters;
  std::vector<Facility> facilities;
  std::vector<Polyline> footpaths;
  std::vector<Block> blocks;
};

RunConfig write_scene(const testfs::TempDir& dir, const Scene& s, const std::string& tag = "") {
  RunConfig cfg;
  cfg.camps = dir.write(tag + "camps.geojson", fixture::camps_geojson(s.camps));
  cfg.shelters = dir.write(tag + "shelters.geojson", fixture::polygons_geojson(s.shelters));
  cfg.facilities = dir.write(tag + "facilities.geojson", fixture::facilities_geojson(s.facilities));
  if (!s.footpaths.empty()) cfg.footpaths = dir.write(tag + "footpaths.geojson", fixture::footpaths_geojson(s.footpaths));
  if (!s.blocks.empty()) cfg.blocks = dir.write(tag + "blocks.geojson", fixture::blocks_geojson(s.blocks));
  return cfg;
}

// One 100 m camp split into 2 x 2 cells, 1000 people spread evenly, n
// latrines at the center, footpaths from every centroid to the center.
Scene uniform_scene(int n_facilities) {
  Scene s;
  s.camps.push_back({"C", square(0, 0, 100, 100), 1000.0, 500.0, 500.0});
  s.shelters.push_back(square(0, 0, 100, 100));
  for (int j = 0; j < n_facilities; ++j)
    s.facilities.push_back(facility("L" + std::to_string(j), at(50, 50), FacilityKind::kLatrine, GenderDesignation::kAll));
  s.footpaths = {{at(25, 25), at(50, 50), at(75, 75)}, {at(75, 25), at(50, 50), at(25, 75)}};
  return s;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("dataset loading and checks") {
  testfs::TempDir dir;
  Scene s = uniform_scene(2);
  RunConfig cfg = write_scene(dir, s);
  const Dataset ds = load_dataset(cfg);
  CHECK(ds.camps.size() == 1);
  CHECK(ds.facilities.size() == 2);
  CHECK(ds.footpaths.size() == 2);
  CHECK(ds.warnings.empty());
  CHECK_FALSE(ds.log.empty());

  SUBCASE("validation") {
    RunConfig bad = cfg;
    bad.footpaths.clear();
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.distance_mode = DistanceMode::kEuclidean;
    CHECK_NOTHROW(bad.validate());
    bad.shelter_areas = dir / "areas.csv";
    CHECK_THROWS_AS(bad.validate(), Error);
    RunConfig neg = cfg;
    neg.d0 = 0.0;
    CHECK_THROWS_AS(neg.validate(), Error);
  }
  SUBCASE("strict placement") {
    Dataset d = ds;
    RunConfig strict = cfg;
    strict.strict = true;
    d.facilities.push_back(facility("far", at(130, 50)));
    CHECK_THROWS_AS(check_dataset(strict, d), Error);
    strict.strict_buffer = 40.0;
    CHECK_NOTHROW(check_dataset(strict, d));
  }
  SUBCASE("degree-like coordinates warn") {
    Dataset d;
    d.camps.push_back({"G", Polygon::rectangle({92.1, 21.1}, {92.2, 21.2}), 10, 5, 5});
    d.facilities.push_back(facility("f", {92.15, 21.15}));
    check_dataset(cfg, d);
    REQUIRE(d.warnings.size() == 1);
    CHECK(d.warnings[0].find("geographic") != std::string::npos);
  }
}

TEST_CASE("uniform camp gives 40 latrines per 1000 people in both modes") {
  testfs::TempDir dir;
  for (DistanceMode mode : {DistanceMode::kNetwork, DistanceMode::kEuclidean}) {
    RunConfig cfg = write_scene(dir, uniform_scene(40));
    cfg.distance_mode = mode;
    cfg.kinds = {false, true, false};
    cfg.out_dir = dir / std::string(to_string(mode));
    const AccessRun run = run_access(cfg, load_dataset(cfg));
    REQUIRE(run.grid.cells.size() == 4);
    const auto a = run.result.field.values(FacilityKind::kLatrine);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(a[i] == doctest::Approx(0.04).epsilon(1e-12));
      CHECK(people_per_facility(a[i]) == doctest::Approx(25.0).epsilon(1e-12));
    }
    for (const char* f : {"field.csv", "field.geojson", "summary.csv", "diagnostics.txt"})
      CHECK(std::filesystem::exists(cfg.out_dir / f));
    const std::string summary = testfs::slurp(cfg.out_dir / "summary.csv");
    CHECK(summary.find("latrine,0.04,0.04,25,25") != std::string::npos);
    CHECK(summary.find("water_pump") == std::string::npos);
  }
}

TEST_CASE("network and euclidean modes agree on a complete straight-line graph") {
  testfs::TempDir dir;
  Scene s;
  s.camps.push_back({"C", square(0, 0, 100, 100), 800.0, 400.0, 400.0});
  s.shelters = {square(0, 0, 60, 100), square(70, 10, 90, 40)};
  const std::vector<Point> fac_pts{at(13.7, 61.2), at(88.1, 7.9), at(41.3, 33.6), at(160.4, 92.7)};
  for (std::size_t j = 0; j < fac_pts.size(); ++j)
    s.facilities.push_back(facility("F" + std::to_string(j), fac_pts[j], kAllKinds[j % 3], GenderDesignation::kAll, 1 + j % 2));
  std::vector<Point> nodes{at(25, 25), at(75, 25), at(25, 75), at(75, 75)};
  nodes.insert(nodes.end(), fac_pts.begin(), fac_pts.end());
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) s.footpaths.push_back({nodes[a], nodes[b]});

  RunConfig net = write_scene(dir, s);
  net.d0 = 120.0;
  net.sigma = 60.0;
  RunConfig euc = net;
  euc.distance_mode = DistanceMode::kEuclidean;
  const Dataset ds = load_dataset(net);
  const AccessRun a = run_access(net, ds);
  const AccessRun b = run_access(euc, ds);
  CHECK(a.network_edges == s.footpaths.size());
  REQUIRE(a.result.field.by_kind.rows() == 4);
  CHECK((a.result.field.by_kind.array() == b.result.field.by_kind.array()).all());
  CHECK((a.result.field.mean.array() == b.result.field.mean.array()).all());
  CHECK(a.result.field.by_kind.sum() > 0.0);
}

TEST_CASE("empty facility layer") {
  testfs::TempDir dir;
  RunConfig cfg = write_scene(dir, uniform_scene(0));
  cfg.out_dir = dir / "out";
  const Dataset ds = load_dataset(cfg);
  REQUIRE_FALSE(ds.warnings.empty());
  const AccessRun run = run_access(cfg, ds);
  CHECK(run.result.field.by_kind.isZero(0.0));
  CHECK(run.result.field.mean.isZero(0.0));
  CHECK_FALSE(run.warnings.empty());
}

TEST_CASE("female scenario") {
  testfs::TempDir dir;
  Scene s = uniform_scene(0);
  s.facilities = {facility("A", at(50, 50), FacilityKind::kLatrine, GenderDesignation::kAll, 4),
                  facility("F", at(50, 50), FacilityKind::kLatrine, GenderDesignation::kFemale, 2),
                  facility("M", at(50, 50), FacilityKind::kLatrine, GenderDesignation::kMale, 3)};
  RunConfig cfg = write_scene(dir, s);
  cfg.kinds = {false, true, false};
  cfg.scenario = {GenderStream::kFemale, 0.75};
  const AccessRun run = run_access(cfg, load_dataset(cfg));
  // 4 * 0.75 shared places against 1000 people, 2 places against 500 women.
  CHECK(run.result.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(3.0 / 1000.0 + 2.0 / 500.0).epsilon(1e-12));
  cfg.scenario = {GenderStream::kMale, 0.75};
  const AccessRun male = run_access(cfg, load_dataset(cfg));
  CHECK(male.result.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(4.0 / 1000.0 + 3.0 / 500.0).epsilon(1e-12));
}

TEST_CASE("compare fields") {
  FieldTable a;
  a.cells = {{0, 0, 0, at(25, 25)}, {0, 1, 1, at(75, 25)}, {1, 0, 2, at(25, 75)}, {1, 1, 3, at(75, 75)}};
  a.population.total = Eigen::VectorXd::Constant(4, 250.0);
  a.population.female = a.population.male = Eigen::VectorXd::Constant(4, 125.0);
  a.field.cells = a.cells;
  a.field.by_kind.setConstant(4, kKindCount, 0.1);
  a.field.mean.setConstant(4, 0.1);
  const std::vector<Block> blocks{{"west", square(0, 0, 50, 100)}, {"east", square(50, 0, 100, 100)},
                                  {"outside", square(500, 500, 600, 600)}};

  const CompareRun same = run_compare(a, a, blocks);
  CHECK(same.change.mean.isZero(0.0));
  CHECK(same.change.by_kind.isZero(0.0));

  FieldTable b = a;
  b.field.mean[0] = b.field.mean[2] = 0.25;
  testfs::TempDir dir;
  const CompareRun run = run_compare(a, b, blocks, dir / "cmp");
  REQUIRE(run.blocks.size() == 3);
  CHECK(run.blocks[0].n_cells == 2);
  CHECK(*run.blocks[0].delta == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(*run.blocks[1].delta == 0.0);
  CHECK_FALSE(run.blocks[2].mean);
  for (const char* f : {"change.csv", "change.geojson", "block_change.csv"}) CHECK(std::filesystem::exists(dir / "cmp" / f));

  FieldTable c = a;
  c.cells.pop_back();
  c.field.cells = c.cells;
  c.field.by_kind.conservativeResize(3, kKindCount);
  c.field.mean.conservativeResize(3);
  CHECK_THROWS_AS(run_compare(a, c, blocks), Error);
}

TEST_CASE("validation against a survey") {
  FieldTable f;
  std::vector<Camp> camps;
  std::string survey = "camp_id,people_per_facility\n";
  const std::vector<double> access{0.02, 0.05, 0.01, 0.04, 0.03};
  for (std::size_t k = 0; k < access.size(); ++k) {
    const double x0 = 100.0 * static_cast<double>(k);
    camps.push_back({"K" + std::to_string(k), square(x0, 0, x0 + 100, 50), 100, 50, 50});
    f.cells.push_back({0, static_cast<std::int64_t>(k), static_cast<std::int64_t>(k), at(x0 + 25, 25)});
    survey += "K" + std::to_string(k) + "," + format_number(1.0 / access[k]) + "\n";
  }
  const auto n = static_cast<Eigen::Index>(access.size());
  f.population.total = f.population.female = f.population.male = Eigen::VectorXd::Ones(n);
  f.field.cells = f.cells;
  f.field.by_kind.resize(n, kKindCount);
  for (Eigen::Index i = 0; i < n; ++i) f.field.by_kind.row(i).setConstant(access[static_cast<std::size_t>(i)]);
  f.field.mean = f.field.by_kind.col(0);

  const ValidateRun v = run_validate(f, camps, parse_csv(survey), FacilityKind::kLatrine, Reducer::kCellMean);
  CHECK(v.camp_ids.size() == 5);
  CHECK(v.rho == -1.0);
  CHECK(run_validate(f, camps, parse_csv(survey), std::nullopt, Reducer::kPopulationWeighted).rho == -1.0);
  CHECK(scatter_csv(v).rfind("camp_id,access,people_per_facility\n", 0) == 0);

  const std::span<const Camp> two(camps.data(), 2);
  CHECK_THROWS_AS(run_validate(f, two, parse_csv(survey), FacilityKind::kLatrine, Reducer::kCellMean), Error);
}

TEST_CASE("command line") {
  testfs::TempDir dir;
  const RunConfig cfg = write_scene(dir, uniform_scene(40));
  std::string out, err;

  SUBCASE("usage errors") {
    CHECK(run_cli({}, &out, &err) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"grid", "--camps", cfg.camps.string(), "--bogus"}) == 2);
    CHECK(run_cli({"access", "--camps", cfg.camps.string()}) == 2);
    CHECK(run_cli({"access", "--camps", cfg.camps.string(), "--facilities", cfg.facilities.string(), "--out",
                   (dir / "o").string(), "--shelters", cfg.shelters.string(), "--mode", "taxicab"}) == 2);
    CHECK(run_cli({"--help"}, &out) == 0);
    CHECK(out.find("access") != std::string::npos);
    CHECK(run_cli({"access", "--help"}, &out) == 0);
    CHECK(out.find("--allgender-factor") != std::string::npos);
  }
  SUBCASE("runtime errors") {
    CHECK(run_cli({"grid", "--camps", (dir / "missing.geojson").string()}, &out, &err) == 1);
    CHECK(err.find("error:") != std::string::npos);
  }
  SUBCASE("grid and allocate") {
    CHECK(run_cli({"grid", "--camps", cfg.camps.string()}, &out) == 0);
    CHECK(out.rfind("cell_id,row,col,x,y\n", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 5);
    CHECK(run_cli({"allocate", "--camps", cfg.camps.string(), "--shelters", cfg.shelters.string()}, &out) == 0);
    CHECK(out.find(",250,125,125,2500\n") != std::string::npos);
  }
  SUBCASE("network") {
    CHECK(run_cli({"network", "--footpaths", cfg.footpaths.string(), "--facilities", cfg.facilities.string(), "--out",
                   (dir / "edges.csv").string()},
                  &out, &err) == 0);
    CHECK(err.find("5 vertices, 4 edges") != std::string::npos);
    CHECK(testfs::slurp(dir / "edges.csv").rfind("edge,u,v,length", 0) == 0);
    CHECK(out.find("L0,") != std::string::npos);
  }
  SUBCASE("access with a config file and overrides") {
    const auto ini = dir.write("run.ini", "[access]\nd0 = 1609\nsigma = 402\nmode = euclidean\nkinds = latrine\n");
    CHECK(run_cli({"--config", ini.string(), "access", "--camps", cfg.camps.string(), "--facilities",
                   cfg.facilities.string(), "--shelters", cfg.shelters.string(), "--out", (dir / "cfg").string(),
                   "--scenario", "female", "--allgender-factor", "0.75"},
                  &out, &err) == 0);
    const FieldTable t = read_field_csv(dir / "cfg/field.csv");
    // 40 shared latrines at 0.75 against 1000 people.
    CHECK(t.field.values(FacilityKind::kLatrine)[0] == doctest::Approx(0.03).epsilon(1e-8));
    CHECK(t.field.values(FacilityKind::kWaterPump)[0] == 0.0);

    const auto bad = dir.write("bad.ini", "[access]\nno_such_key = 1\n");
    CHECK(run_cli({"--config", bad.string(), "access", "--camps", cfg.camps.string(), "--facilities",
                   cfg.facilities.string(), "--shelters", cfg.shelters.string(), "--out", (dir / "x").string()}) == 2);
  }
  SUBCASE("compare and validate") {
    const std::string o1 = (dir / "r1").string(), o2 = (dir / "r2").string();
    const std::vector<std::string> base{"access", "--camps", cfg.camps.string(), "--facilities", cfg.facilities.string(),
                                        "--shelters", cfg.shelters.string(), "--footpaths", cfg.footpaths.string()};
    auto with_out = [&](const std::string& o) {
      auto v = base;
      v.insert(v.end(), {"--out", o});
      return v;
    };
    REQUIRE(run_cli(with_out(o1)) == 0);
    REQUIRE(run_cli(with_out(o2)) == 0);
    for (const char* f : {"field.csv", "field.geojson", "summary.csv", "diagnostics.txt"})
      CHECK(testfs::slurp(dir / "r1" / f) == testfs::slurp(dir / "r2" / f));
    CHECK(run_cli({"compare", "--a", o1 + "/field.csv", "--b", o2 + "/field.geojson", "--out", (dir / "cmp").string()}) == 0);
    const CsvTable t = read_csv(dir / "cmp/change.csv");
    CHECK(t.rows.size() == 4);
    for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(t.number(r, t.column("dA_mean")) == 0.0);
    const auto survey = dir.write("survey.csv", "camp_id,people_per_facility\nC,25\n");
    CHECK(run_cli({"validate", "--field", o1 + "/field.csv", "--camps", cfg.camps.string(), "--survey", survey.string()},
                  &out, &err) == 1);
    CHECK(err.find("at least 3 camps") != std::string::npos);
  }
  SUBCASE("mask commands") {
    BinaryMask ref(32, 32), y(32, 32);
    for (int r = 8; r < 16; ++r)
      for (int c = 10; c < 20; ++c) ref.set(r, c);
    y = shift(ref, -2, 3);
    write_mask(dir / "ref.png", ref);
    write_mask(dir / "y.pgm", y);
    CHECK(run_cli({"align", "--mask", (dir / "y.pgm").string(), "--ref", (dir / "ref.png").string(), "--max-shift", "4",
                   "--max-rotation", "0", "--out", (dir / "aligned.png").string()},
                  &out) == 0);
    CHECK(out == "du=2\ndv=-3\ntheta=0\nf1=1\n");
    CHECK(read_mask(dir / "aligned.png") == ref);

    CHECK(run_cli({"refine", "--teacher", (dir / "y.pgm").string(), "--reference", (dir / "ref.png").string(), "--out",
                   (dir / "refined.png").string(), "--boxes", (dir / "boxes.csv").string()}) == 0);
    CHECK(read_mask(dir / "refined.png") == refine(y, ref));
    CHECK(testfs::slurp(dir / "boxes.csv") == "mask_id,min_col,min_row,max_col,max_row\ny,8,11,17,18\n");

    CHECK(run_cli({"metrics", "--pred", (dir / "y.pgm").string(), (dir / "ref.png").string(), "--gt",
                   (dir / "ref.png").string(), (dir / "ref.png").string()},
                  &out) == 0);
    const SegmentationMetrics one = score(y, ref);
    CHECK(out.find("pairs=2\ntp=" + std::to_string(one.counts.tp + 80)) != std::string::npos);
    CHECK(run_cli({"metrics", "--pred", (dir / "y.pgm").string(), "--gt", (dir / "ref.png").string(), "--mode", "macro"},
                  &out) == 0);
    CHECK(out.find("f1=" + format_number(*one.f1) + "\n") != std::string::npos);
    CHECK(out.find("skipped_f1=0") != std::string::npos);
    CHECK(run_cli({"metrics", "--pred", (dir / "y.pgm").string(), "--gt", (dir / "ref.png").string(), "--mode", "mode"}) == 2);
  }
}
