#pragma once

#include "sfca/accessibility.hpp"
#include "sfca/demography.hpp"
#include "sfca/grid.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sfca {

/// Shortest decimal with at most 9 significant digits; "inf", "-inf", "nan"
/// for non-finite values.
[[nodiscard]] std::string format_number(double v);

/// Parses what format_number writes (and ordinary decimal text).
[[nodiscard]] double parse_number(std::string_view s);

/// The value format_number(v) reads back as.
[[nodiscard]] double round_trip(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::filesystem::path source;

  /// Column index by name; throws naming the file when absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] std::optional<std::size_t> find_column(std::string_view name) const;
  /// Numeric cell with row/column context in errors (row is 0-based data row).
  [[nodiscard]] double number(std::size_t row, std::size_t col) const;
};

/// RFC 4180 style: quoted fields, doubled quotes, CRLF or LF line ends.
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);
[[nodiscard]] CsvTable parse_csv(std::string_view text, const std::filesystem::path& source = {});

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Write `text` to `path` in one piece, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Per-cell accessibility table as stored on disk.
struct FieldTable {
  std::vector<GridCell> cells;
  PopulationField population;
  AccessField field;
};

inline const std::vector<std::string> kFieldColumns{"cell_id", "row",      "col",    "x",      "y",
                                                     "pop_total", "pop_female", "pop_male", "A_water", "A_latrine",
                                                     "A_bath", "A_mean"};

[[nodiscard]] std::string field_csv(const AccessField& field, const PopulationField& population);
void write_field_csv(const std::filesystem::path& path, const AccessField& field, const PopulationField& population);
[[nodiscard]] FieldTable read_field_csv(const std::filesystem::path& path);
[[nodiscard]] FieldTable field_table_from_csv(const CsvTable& t);

[[nodiscard]] std::string change_csv(const FieldChange& change);
[[nodiscard]] std::string block_summary_csv(std::span<const BlockSummary> blocks, bool with_change);

}  // namespace sfca
