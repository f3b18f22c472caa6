#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "flowph/filtration.hpp"
#include "flowph/persistence.hpp"
#include "flowph/recurrence.hpp"
#include "flowph/signal_model.hpp"

namespace flowph::io {

/// 17 significant digits; integral values keep a trailing ".0".
std::string format_number(double v);

/// Writes to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  /// Column position by name; throws ParseError when absent.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
};

/// Comma-separated text with a header row. Blank lines are skipped; ragged
/// rows raise ParseError with their line number.
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// Strict number parse of a cell ("inf"/"nan" accepted); ParseError otherwise.
double parse_number(const std::string& cell, std::size_t line);

/// Which columns make up a cloud. Columns are header names or 0-based
/// positions. Without value columns every x<digits> column is used in order.
struct ColumnMap {
  std::vector<std::string> values;
  std::optional<std::string> time;   // default "t" when present
  std::optional<std::string> phase;  // default "phase" when present
  std::optional<double> rate_hz;     // overrides the time column
};

struct LoadedCloud {
  TimeSeriesPointCloud cloud;
  std::optional<std::vector<double>> phase;
};

LoadedCloud cloud_from_table(const CsvTable& table, const ColumnMap& map);

/// Header `t,x0..x{d-1}[,phase]`.
std::string cloud_csv(const TimeSeriesPointCloud& cloud, const std::vector<double>* phase = nullptr);

/// Header `i,j,value`, filtration order.
std::string edges_csv(const FilteredComplex& complex);

/// Header `dim,birth,death,unresolved`; unresolved deaths are written as the
/// scale cap, or left empty with cap_unresolved = false.
std::string diagram_csv(const PersistenceDiagram& diagram, bool cap_unresolved = true);

/// Header `i,t1,truth,within_tol`; absent values are empty cells.
std::string recurrence_csv(const RecurrenceTable& table, const std::vector<std::optional<std::size_t>>* truth,
                           std::size_t tol);

}  // namespace flowph::io
