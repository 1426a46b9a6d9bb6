#include "sfca/tabular.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sfca {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  if (res.ec != std::errc{}) throw Error("format_number: conversion failed");
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s == "inf" || s == "+inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error("not a number: '" + std::string(s) + "'");
  return v;
}

double round_trip(double v) { return parse_number(format_number(v)); }

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw Error(source.string() + ": missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const auto& r = rows.at(row);
  if (col >= r.size()) throw Error(source.string() + ": line " + std::to_string(row + 2) + " has too few fields");
  try {
    return parse_number(r[col]);
  } catch (const Error& e) {
    throw Error(source.string() + ": line " + std::to_string(row + 2) + ", column '" + header[col] + "': " + e.what());
  }
}

CsvTable parse_csv(std::string_view text, const std::filesystem::path& source) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  CsvTable t;
  t.source = source;
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t i = 0;
  auto end_record = [&] {
    rec.push_back(std::move(field));
    field.clear();
    const bool blank = rec.size() == 1 && rec[0].empty();
    if (!blank) records.push_back(std::move(rec));
    rec.clear();
    any = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field.push_back(c);
      any = true;
    }
    ++i;
  }
  if (quoted) throw Error(source.string() + ": unterminated quoted field");
  if (any || !field.empty()) end_record();
  if (records.empty()) throw Error(source.string() + ": empty CSV (header row required)");
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size())
      throw Error(source.string() + ": line " + std::to_string(r + 2) + " has " + std::to_string(t.rows[r].size()) +
                  " fields, header has " + std::to_string(t.header.size()));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
    } else {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    }
  }
  out << '\n';
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::string field_csv(const AccessField& field, const PopulationField& population) {
  const auto n = static_cast<Eigen::Index>(field.cells.size());
  if (population.size() != n || field.by_kind.rows() != n || field.mean.size() != n)
    throw Error("field_csv: field and population sizes differ");
  std::ostringstream out;
  write_csv_row(out, kFieldColumns);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GridCell& c = field.cells[static_cast<std::size_t>(i)];
    write_csv_row(out, {std::to_string(c.cell_id), std::to_string(c.row), std::to_string(c.col),
                        format_number(c.centroid.x()), format_number(c.centroid.y()),
                        format_number(population.total[i]), format_number(population.female[i]),
                        format_number(population.male[i]), format_number(field.by_kind(i, 0)),
                        format_number(field.by_kind(i, 1)), format_number(field.by_kind(i, 2)),
                        format_number(field.mean[i])});
  }
  return out.str();
}

void write_field_csv(const std::filesystem::path& path, const AccessField& field, const PopulationField& population) {
  write_text_file(path, field_csv(field, population));
}

namespace {

std::int64_t integer_cell(const CsvTable& t, std::size_t r, std::size_t c) {
  const double v = t.number(r, c);
  if (v != std::floor(v) || std::abs(v) > 9e15)
    throw Error(t.source.string() + ": line " + std::to_string(r + 2) + ", column '" + t.header[c] +
                "' must be an integer");
  return static_cast<std::int64_t>(v);
}

}  // namespace

FieldTable field_table_from_csv(const CsvTable& t) {
  std::vector<std::size_t> col;
  for (const auto& name : kFieldColumns) col.push_back(t.column(name));
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  FieldTable out;
  out.population.total.resize(n);
  out.population.female.resize(n);
  out.population.male.resize(n);
  out.field.by_kind.resize(n, kKindCount);
  out.field.mean.resize(n);
  out.cells.resize(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    GridCell& c = out.cells[r];
    c.cell_id = integer_cell(t, r, col[0]);
    c.row = integer_cell(t, r, col[1]);
    c.col = integer_cell(t, r, col[2]);
    c.centroid = Point(t.number(r, col[3]), t.number(r, col[4]));
    out.population.total[i] = t.number(r, col[5]);
    out.population.female[i] = t.number(r, col[6]);
    out.population.male[i] = t.number(r, col[7]);
    for (int k = 0; k < kKindCount; ++k) out.field.by_kind(i, k) = t.number(r, col[8 + static_cast<std::size_t>(k)]);
    out.field.mean[i] = t.number(r, col[11]);
  }
  out.field.cells = out.cells;
  return out;
}

FieldTable read_field_csv(const std::filesystem::path& path) { return field_table_from_csv(read_csv(path)); }

std::string change_csv(const FieldChange& change) {
  std::ostringstream out;
  write_csv_row(out, {"cell_id", "row", "col", "x", "y", "dA_water", "dA_latrine", "dA_bath", "dA_mean"});
  for (std::size_t r = 0; r < change.cells.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const GridCell& c = change.cells[r];
    write_csv_row(out, {std::to_string(c.cell_id), std::to_string(c.row), std::to_string(c.col),
                        format_number(c.centroid.x()), format_number(c.centroid.y()),
                        format_number(change.by_kind(i, 0)), format_number(change.by_kind(i, 1)),
                        format_number(change.by_kind(i, 2)), format_number(change.mean[i])});
  }
  return out.str();
}

std::string block_summary_csv(std::span<const BlockSummary> blocks, bool with_change) {
  std::ostringstream out;
  if (with_change) {
    write_csv_row(out, {"block_id", "n_cells", "mean_before", "mean_after", "delta"});
  } else {
    write_csv_row(out, {"block_id", "n_cells", "mean"});
  }
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& b : blocks) {
    if (with_change) {
      write_csv_row(out, {b.block_id, std::to_string(b.n_cells), opt(b.before), opt(b.mean), opt(b.delta)});
    } else {
      write_csv_row(out, {b.block_id, std::to_string(b.n_cells), opt(b.mean)});
    }
  }
  return out.str();
}

}  // namespace sfca
