#include "sfca/cli.hpp"

#include "sfca/geojson.hpp"
#include "sfca/mask_io.hpp"
#include "sfca/maskops.hpp"
#include "sfca/parallel.hpp"
#include "sfca/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>

namespace sfca {

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string("undefined"); }

struct Paths {
  std::string camps, populations, facilities, footpaths, shelters, shelter_areas, blocks, out;
};

void add_camp_options(CLI::App* app, Paths& p, bool required) {
  auto* o = app->add_option("--camps", p.camps, "Camp polygons (GeoJSON): camp_id, pop_total, pop_female, pop_male");
  if (required) o->required();
}

void add_shelter_options(CLI::App* app, Paths& p) {
  auto* s = app->add_option("--shelters", p.shelters, "Shelter footprints (GeoJSON polygons)");
  auto* a = app->add_option("--shelter-areas", p.shelter_areas, "Shelter area table (CSV: cell_id, camp_id, shelter_area)");
  s->excludes(a);
  app->add_option("--populations", p.populations, "Camp population override (CSV keyed by camp_id)");
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string grid_csv(const Grid& g) {
  std::ostringstream s;
  write_csv_row(s, {"cell_id", "row", "col", "x", "y"});
  for (const auto& c : g.cells)
    write_csv_row(s, {std::to_string(c.cell_id), std::to_string(c.row), std::to_string(c.col),
                      format_number(c.centroid.x()), format_number(c.centroid.y())});
  return s.str();
}

std::string bbox_csv(const std::string& mask_id, const std::vector<BBox>& boxes) {
  std::ostringstream s;
  write_csv_row(s, {"mask_id", "min_col", "min_row", "max_col", "max_row"});
  for (const auto& b : boxes)
    write_csv_row(s, {mask_id, std::to_string(b.min_col), std::to_string(b.min_row), std::to_string(b.max_col),
                      std::to_string(b.max_row)});
  return s.str();
}

}  // namespace

int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid-level WASH accessibility with two-step floating catchments, plus mask utilities", "sfca"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; [subcommand] sections mirror the flags, flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  Paths p;
  RunConfig cfg;

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "Build the analysis grid over the camp boundaries");
  add_camp_options(grid_cmd, p, true);
  grid_cmd->add_option("--cell-size", cfg.cell_size, "Cell edge in meters")->capture_default_str();
  grid_cmd->add_option("--out", p.out, "Output CSV (cell_id, row, col, x, y); stdout when omitted");

  // allocate
  auto* alloc_cmd = app.add_subcommand("allocate", "Apportion camp populations to grid cells by shelter area");
  add_camp_options(alloc_cmd, p, true);
  add_shelter_options(alloc_cmd, p);
  alloc_cmd->add_option("--cell-size", cfg.cell_size, "Cell edge in meters")->capture_default_str();
  alloc_cmd->add_option("--out", p.out, "Output CSV; stdout when omitted");

  // network
  auto* net_cmd = app.add_subcommand("network", "Build the pedestrian network and snap facilities to it");
  net_cmd->add_option("--footpaths", p.footpaths, "Footpath lines (GeoJSON)")->required();
  net_cmd->add_option("--snap-tolerance", cfg.snap_tolerance, "Vertex merge tolerance in meters")->capture_default_str();
  net_cmd->add_option("--facilities", p.facilities, "Facility points to snap (GeoJSON)");
  net_cmd->add_option("--out", p.out, "Edge list CSV (edge, u, v, length, ux, uy, vx, vy)");
  std::string snaps_out;
  net_cmd->add_option("--snaps-out", snaps_out, "Facility snap CSV (facility_id, edge, position, x, y, offset)");

  // access
  auto* acc_cmd = app.add_subcommand("access", "Run the full accessibility pipeline");
  add_camp_options(acc_cmd, p, true);
  add_shelter_options(acc_cmd, p);
  acc_cmd->add_option("--facilities", p.facilities, "Facility points (GeoJSON): facility_id, kind, gender, count")->required();
  acc_cmd->add_option("--footpaths", p.footpaths, "Footpath lines (GeoJSON), network mode");
  acc_cmd->add_option("--blocks", p.blocks, "Block polygons (GeoJSON) with block_id");
  acc_cmd->add_option("--out", p.out, "Output directory")->required();
  acc_cmd->add_option("--cell-size", cfg.cell_size, "Cell edge in meters")->capture_default_str();
  acc_cmd->add_option("--d0", cfg.d0, "Catchment threshold in meters")->capture_default_str();
  acc_cmd->add_option("--sigma", cfg.sigma, "Gaussian decay scale in meters")->capture_default_str();
  std::array<double, kKindCount> d0k{};
  std::array<double, kKindCount> sigk{};
  std::array<CLI::Option*, kKindCount> d0k_opt{};
  std::array<CLI::Option*, kKindCount> sigk_opt{};
  const std::array<const char*, kKindCount> short_kind{"water", "latrine", "bath"};
  for (int k = 0; k < kKindCount; ++k) {
    const auto i = static_cast<std::size_t>(k);
    d0k_opt[i] = acc_cmd->add_option(std::string("--d0-") + short_kind[i], d0k[i],
                                     std::string("Catchment override for ") + std::string(to_string(kAllKinds[i])));
    sigk_opt[i] = acc_cmd->add_option(std::string("--sigma-") + short_kind[i], sigk[i],
                                      std::string("Decay scale override for ") + std::string(to_string(kAllKinds[i])));
  }
  std::string mode_name = "network";
  acc_cmd->add_option("--mode", mode_name, "Distance mode: network or euclidean")
      ->check(CLI::IsMember({"network", "euclidean"}))
      ->capture_default_str();
  std::string scenario_name = "total";
  acc_cmd->add_option("--scenario", scenario_name, "Demand stream: total, female or male")
      ->check(CLI::IsMember({"total", "female", "male"}))
      ->capture_default_str();
  acc_cmd->add_option("--allgender-factor", cfg.scenario.allgender_factor,
                      "Share of all-gender capacity usable in the female stream, in (0, 1]")
      ->capture_default_str();
  std::vector<std::string> kinds;
  acc_cmd->add_option("--kinds", kinds, "Facility kinds to include, comma separated (default all)")
      ->check(CLI::IsMember({"water_pump", "latrine", "bathing_cubicle"}))
      ->delimiter(',');
  acc_cmd->add_option("--snap-tolerance", cfg.snap_tolerance, "Footpath vertex merge tolerance in meters")
      ->capture_default_str();
  acc_cmd->add_flag("--strict", cfg.strict, "Require every facility to lie inside a camp");
  acc_cmd->add_option("--strict-buffer", cfg.strict_buffer, "Slack around camp boundaries in strict mode (m)")
      ->capture_default_str();

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Per-cell and per-block change between two fields");
  std::string field_a, field_b;
  cmp_cmd->add_option("--a", field_a, "Earlier field (CSV or GeoJSON)")->required();
  cmp_cmd->add_option("--b", field_b, "Later field (CSV or GeoJSON)")->required();
  cmp_cmd->add_option("--blocks", p.blocks, "Block polygons (GeoJSON) with block_id");
  cmp_cmd->add_option("--out", p.out, "Output directory")->required();
  double cmp_cell = 50.0;
  cmp_cmd->add_option("--cell-size", cmp_cell, "Cell edge for the GeoJSON squares")->capture_default_str();

  // validate
  auto* val_cmd = app.add_subcommand("validate", "Spearman check of camp accessibility against a survey");
  std::string field_path, survey_path;
  val_cmd->add_option("--field", field_path, "Field (CSV or GeoJSON)")->required();
  add_camp_options(val_cmd, p, true);
  val_cmd->add_option("--survey", survey_path, "Survey CSV (camp_id, people_per_facility)")->required();
  std::string val_kind = "latrine";
  val_cmd->add_option("--kind", val_kind, "Facility kind or 'mean'")
      ->check(CLI::IsMember({"water_pump", "latrine", "bathing_cubicle", "mean"}))
      ->capture_default_str();
  std::string reducer_name = "cell-mean";
  val_cmd->add_option("--reducer", reducer_name, "Camp aggregate: cell-mean or pop-weighted")
      ->check(CLI::IsMember({"cell-mean", "pop-weighted"}))
      ->capture_default_str();
  val_cmd->add_option("--out", p.out, "Scatter CSV (camp_id, access, people_per_facility)");

  // align
  auto* align_cmd = app.add_subcommand("align", "Rigid alignment of a mask to a reference by F1");
  std::string mask_path, ref_path;
  align_cmd->add_option("--mask", mask_path, "Mask to move (PNG or PGM)")->required();
  align_cmd->add_option("--ref", ref_path, "Reference mask (PNG or PGM)")->required();
  AlignOptions aopt;
  align_cmd->add_option("--max-shift", aopt.max_shift, "Translation range in pixels")->capture_default_str();
  align_cmd->add_option("--max-rotation", aopt.max_rotation, "Rotation range in degrees")->capture_default_str();
  align_cmd->add_option("--rotation-step", aopt.rotation_step, "Rotation step in degrees")->capture_default_str();
  align_cmd->add_option("--out", p.out, "Write the aligned mask");

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Intersect a teacher mask with a reference mask");
  std::string teacher_path, reference_path, boxes_path, mask_id;
  refine_cmd->add_option("--teacher", teacher_path, "Teacher prediction (PNG or PGM)")->required();
  refine_cmd->add_option("--reference", reference_path, "Guided reference mask (PNG or PGM)")->required();
  refine_cmd->add_option("--out", p.out, "Refined mask (PNG or PGM)")->required();
  refine_cmd->add_option("--boxes", boxes_path, "Bounding boxes of teacher components (CSV)");
  refine_cmd->add_option("--mask-id", mask_id, "mask_id column value (default: teacher file stem)");
  int connectivity = 8;
  refine_cmd->add_option("--connectivity", connectivity, "Component connectivity, 4 or 8")
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();

  // metrics
  auto* met_cmd = app.add_subcommand("metrics", "IoU, precision, recall and F1 over mask pairs");
  std::vector<std::string> preds, gts;
  met_cmd->add_option("--pred", preds, "Predicted masks")->required();
  met_cmd->add_option("--gt", gts, "Ground-truth masks, same order")->required();
  std::string metric_mode = "micro";
  met_cmd->add_option("--mode", metric_mode, "micro (pooled counts) or macro (mean of per-pair metrics)")
      ->check(CLI::IsMember({"micro", "macro"}))
      ->capture_default_str();

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (threads > 0) set_thread_count(threads);

    if (grid_cmd->parsed()) {
      if (!(cfg.cell_size > 0.0)) throw Error("cell_size must be > 0");
      Dataset ds;
      ds.camps = load_camps(p.camps);
      const Grid g = grid_for(cfg, ds);
      write_or_print(p.out, grid_csv(g), out);
      err << "grid: " << g.spec.n_cols << " x " << g.spec.n_rows << ", " << g.cells.size() << " cells\n";
      return 0;
    }

    if (alloc_cmd->parsed()) {
      if (!(cfg.cell_size > 0.0)) throw Error("cell_size must be > 0");
      if (p.shelters.empty() == p.shelter_areas.empty()) throw Error("exactly one of --shelters or --shelter-areas is required");
      RunConfig rc = cfg;
      rc.camps = p.camps;
      rc.populations = p.populations;
      Dataset ds;
      ds.camps = load_camps(rc.camps);
      if (!rc.populations.empty()) apply_population_csv(ds.camps, rc.populations);
      if (!p.shelters.empty()) {
        ds.shelters = load_polygons(p.shelters);
      } else {
        const CsvTable t = read_csv(p.shelter_areas);
        const std::size_t cc = t.column("cell_id"), kc = t.column("camp_id"), ac = t.column("shelter_area");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
          ds.shelter_areas.push_back({static_cast<std::int64_t>(t.number(r, cc)), t.rows[r][kc], t.number(r, ac)});
      }
      const Grid g = grid_for(rc, ds);
      const Allocation a = allocate(g, ds);
      std::ostringstream s;
      write_csv_row(s, {"cell_id", "row", "col", "x", "y", "pop_total", "pop_female", "pop_male", "shelter_area"});
      for (std::size_t i = 0; i < g.cells.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const GridCell& c = g.cells[i];
        write_csv_row(s, {std::to_string(c.cell_id), std::to_string(c.row), std::to_string(c.col),
                          format_number(c.centroid.x()), format_number(c.centroid.y()),
                          format_number(a.population.total[k]), format_number(a.population.female[k]),
                          format_number(a.population.male[k]), format_number(a.shelter_area[k])});
      }
      write_or_print(p.out, s.str(), out);
      for (const auto& id : a.camps_skipped) err << "warning: camp '" << id << "' has no shelter area\n";
      return 0;
    }

    if (net_cmd->parsed()) {
      const auto lines = load_footpaths(p.footpaths);
      const NetworkBuild nb = build_network(lines, cfg.snap_tolerance);
      const PedestrianNetwork& net = nb.network;
      err << "network: " << net.vertex_count() << " vertices, " << net.edge_count() << " edges, "
          << nb.dropped_edges << " dropped, " << nb.merged_points << " merged points\n";
      if (!p.out.empty()) {
        std::ostringstream s;
        write_csv_row(s, {"edge", "u", "v", "length", "ux", "uy", "vx", "vy"});
        for (std::size_t e = 0; e < net.edge_count(); ++e) {
          const Edge& ed = net.edges()[e];
          const Point& a = net.vertices()[ed.u];
          const Point& b = net.vertices()[ed.v];
          write_csv_row(s, {std::to_string(e), std::to_string(ed.u), std::to_string(ed.v), format_number(ed.length),
                            format_number(a.x()), format_number(a.y()), format_number(b.x()), format_number(b.y())});
        }
        write_text_file(p.out, s.str());
      }
      if (!p.facilities.empty()) {
        const auto fac = load_facilities(p.facilities);
        std::ostringstream s;
        write_csv_row(s, {"facility_id", "edge", "position", "x", "y", "offset"});
        for (const auto& f : fac) {
          const SnapResult r = net.snap(f.location);
          write_csv_row(s, {f.facility_id, std::to_string(r.edge), format_number(r.position), format_number(r.anchor.x()),
                            format_number(r.anchor.y()), format_number(r.offset)});
        }
        write_or_print(snaps_out, s.str(), out);
      }
      return 0;
    }

    if (acc_cmd->parsed()) {
      cfg.distance_mode = *parse_distance_mode(mode_name);
      cfg.scenario.gender_stream = *parse_stream(scenario_name);
      cfg.camps = p.camps;
      cfg.populations = p.populations;
      cfg.facilities = p.facilities;
      cfg.footpaths = p.footpaths;
      cfg.shelters = p.shelters;
      cfg.shelter_areas = p.shelter_areas;
      cfg.blocks = p.blocks;
      cfg.out_dir = p.out;
      for (int k = 0; k < kKindCount; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (d0k_opt[i]->count() > 0) cfg.d0_by_kind[i] = d0k[i];
        if (sigk_opt[i]->count() > 0) cfg.sigma_by_kind[i] = sigk[i];
      }
      if (!kinds.empty()) {
        cfg.kinds = {false, false, false};
        for (const auto& k : kinds) cfg.kinds[static_cast<std::size_t>(*parse_facility_kind(k))] = true;
      }
      const Dataset ds = load_dataset(cfg);
      for (const auto& line : ds.log) err << line << '\n';
      const AccessRun run = run_access(cfg, ds);
      for (const auto& w : run.warnings) err << "warning: " << w << '\n';
      if (!run.result.zero_demand_facilities.empty())
        err << "warning: " << run.result.zero_demand_facilities.size() << " facilities have no demand in reach\n";
      err << "wrote " << cfg.out_dir.string() << '\n';
      return 0;
    }

    if (cmp_cmd->parsed()) {
      const FieldTable a = read_field(field_a);
      const FieldTable b = read_field(field_b);
      std::vector<Block> blocks;
      if (!p.blocks.empty()) blocks = load_blocks(p.blocks);
      const CompareRun run = run_compare(a, b, blocks, p.out, cmp_cell);
      for (const auto& s : run.blocks)
        if (s.n_cells == 0) err << "warning: block '" << s.block_id << "' contains no cell centroids\n";
      err << "wrote " << p.out << '\n';
      return 0;
    }

    if (val_cmd->parsed()) {
      const FieldTable f = read_field(field_path);
      const auto camps = load_camps(p.camps);
      const CsvTable survey = read_csv(survey_path);
      std::optional<FacilityKind> kind;
      if (val_kind != "mean") kind = parse_facility_kind(val_kind);
      const Reducer reducer = reducer_name == "pop-weighted" ? Reducer::kPopulationWeighted : Reducer::kCellMean;
      const ValidateRun v = run_validate(f, camps, survey, kind, reducer);
      out << "camps=" << v.camp_ids.size() << '\n' << "rho=" << format_number(v.rho) << '\n';
      if (!p.out.empty()) write_text_file(p.out, scatter_csv(v));
      return 0;
    }

    if (align_cmd->parsed()) {
      const BinaryMask y = read_mask(mask_path);
      const BinaryMask ref = read_mask(ref_path);
      const AlignResult r = align(y, ref, aopt);
      out << "du=" << r.transform.du << '\n'
          << "dv=" << r.transform.dv << '\n'
          << "theta=" << format_number(r.transform.theta) << '\n'
          << "f1=" << format_number(r.score) << '\n';
      if (!p.out.empty()) write_mask(p.out, apply_transform(y, r.transform));
      return 0;
    }

    if (refine_cmd->parsed()) {
      const BinaryMask teacher = read_mask(teacher_path);
      const BinaryMask reference = read_mask(reference_path);
      write_mask(p.out, refine(teacher, reference));
      if (!boxes_path.empty()) {
        const Connectivity conn = connectivity == 4 ? Connectivity::kFour : Connectivity::kEight;
        const std::string id = mask_id.empty() ? std::filesystem::path(teacher_path).stem().string() : mask_id;
        write_or_print(boxes_path, bbox_csv(id, extract_bboxes(teacher, conn)), out);
      }
      return 0;
    }

    if (met_cmd->parsed()) {
      if (preds.size() != gts.size()) throw Error("--pred and --gt need the same number of masks");
      std::vector<MaskPair> pairs;
      pairs.reserve(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i) pairs.push_back({read_mask(preds[i]), read_mask(gts[i])});
      const CorpusMetrics m = score_corpus(pairs, metric_mode == "macro" ? CorpusMode::kMacro : CorpusMode::kMicro);
      out << "mode=" << metric_mode << '\n'
          << "pairs=" << m.pairs << '\n'
          << "tp=" << m.counts.tp << '\n'
          << "fp=" << m.counts.fp << '\n'
          << "fn=" << m.counts.fn << '\n'
          << "tn=" << m.counts.tn << '\n'
          << "iou=" << opt_number(m.iou) << '\n'
          << "precision=" << opt_number(m.precision) << '\n'
          << "recall=" << opt_number(m.recall) << '\n'
          << "f1=" << opt_number(m.f1) << '\n';
      if (metric_mode == "macro")
        out << "skipped_iou=" << m.skipped_iou << '\n'
            << "skipped_precision=" << m.skipped_precision << '\n'
            << "skipped_recall=" << m.skipped_recall << '\n'
            << "skipped_f1=" << m.skipped_f1 << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

int cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"sfca"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sfca
