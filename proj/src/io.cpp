#include "flowph/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "flowph/errors.hpp"

namespace flowph::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{:.17g}", v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(dir)) {
    throw Error(fmt::format("cannot write {}: directory {} does not exist", path.string(), dir.string()));
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open {} for writing", tmp.string()));
    out << text;
    out.flush();
    if (!out) throw Error(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
  }
}

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(const std::string& name) const {
  if (const auto c = find_column(name)) return *c;
  throw ParseError(fmt::format("missing column '{}'", name), 1);
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// A column given by name, or by 0-based position when it is all digits.
std::size_t resolve(const CsvTable& table, const std::string& ref) {
  if (const auto c = table.find_column(ref)) return *c;
  if (!ref.empty() && std::all_of(ref.begin(), ref.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    const auto pos = static_cast<std::size_t>(std::stoul(ref));
    if (pos < table.header.size()) return pos;
  }
  throw ParseError(fmt::format("no column '{}' in header", ref), 1);
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(fmt::format("expected {} cells, found {}", table.header.size(), cells.size()), line_no);
    }
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (table.header.empty()) throw ParseError("empty CSV input", 0);
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  try {
    return parse_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
  }
}

double parse_number(const std::string& cell, std::size_t line) {
  if (cell.empty()) throw ParseError("empty numeric cell", line);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw ParseError(fmt::format("'{}' is not a number", cell), line);
  }
  return v;
}

LoadedCloud cloud_from_table(const CsvTable& table, const ColumnMap& map) {
  std::vector<std::size_t> value_cols;
  if (!map.values.empty()) {
    for (const auto& ref : map.values) value_cols.push_back(resolve(table, ref));
  } else {
    for (std::size_t d = 0;; ++d) {
      const auto c = table.find_column(fmt::format("x{}", d));
      if (!c) break;
      value_cols.push_back(*c);
    }
    if (value_cols.empty()) throw ParseError("no x0.. columns and no column map given", 1);
  }

  std::optional<std::size_t> time_col;
  if (map.rate_hz) {
    if (!(*map.rate_hz > 0.0)) throw InvalidArgument("sampling rate must be positive");
  } else {
    time_col = map.time ? std::optional(resolve(table, *map.time)) : table.find_column("t");
    if (!time_col) throw ParseError("no time column; give a sampling rate", 1);
  }
  const std::optional<std::size_t> phase_col =
      map.phase ? std::optional(resolve(table, *map.phase)) : table.find_column("phase");

  const std::size_t n = table.rows.size();
  TimeSeriesPointCloud::Points points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(value_cols.size()));
  std::vector<double> times;
  std::vector<double> phase;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.lines[r];
    for (std::size_t a = 0; a < value_cols.size(); ++a) {
      points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = parse_number(row[value_cols[a]], line);
    }
    if (time_col) times.push_back(parse_number(row[*time_col], line));
    if (phase_col) phase.push_back(parse_number(row[*phase_col], line));
  }

  double dt = 0.0;
  double t0 = 0.0;
  if (map.rate_hz) {
    dt = 1.0 / *map.rate_hz;
  } else {
    if (n < 2) throw ParseError("need at least two rows to infer the sampling interval", 0);
    t0 = times[0];
    dt = times[1] - times[0];
    if (!(dt > 0.0)) throw ParseError("time column is not increasing", table.lines[1]);
    const double span = times.back() - times.front();
    const double expected = dt * static_cast<double>(n - 1);
    if (std::abs(span - expected) > 1e-6 * std::abs(expected)) {
      throw ParseError("time column is not uniformly sampled", table.lines.back());
    }
  }
  LoadedCloud out{TimeSeriesPointCloud(std::move(points), dt, t0), std::nullopt};
  if (phase_col) out.phase = std::move(phase);
  return out;
}

std::string cloud_csv(const TimeSeriesPointCloud& cloud, const std::vector<double>* phase) {
  if (phase && phase->size() != cloud.size()) throw InvalidArgument("phase length does not match the cloud");
  std::string out = "t";
  for (std::size_t a = 0; a < cloud.dim(); ++a) out += fmt::format(",x{}", a);
  if (phase) out += ",phase";
  out += '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out += format_number(cloud.time(i));
    for (std::size_t a = 0; a < cloud.dim(); ++a) {
      out += ',';
      out += format_number(cloud.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)));
    }
    if (phase) {
      out += ',';
      out += format_number((*phase)[i]);
    }
    out += '\n';
  }
  return out;
}

std::string edges_csv(const FilteredComplex& complex) {
  std::string out = "i,j,value\n";
  for (const auto& e : complex.edges()) out += fmt::format("{},{},{}\n", e.i, e.j, format_number(e.value));
  return out;
}

std::string diagram_csv(const PersistenceDiagram& diagram, bool cap_unresolved) {
  std::string out = "dim,birth,death,unresolved\n";
  for (const auto& p : diagram.pairs) {
    const std::string death =
        p.unresolved ? (cap_unresolved ? format_number(diagram.scale_cap) : std::string()) : format_number(p.death);
    out += fmt::format("{},{},{},{}\n", p.dim, format_number(p.birth), death, p.unresolved ? 1 : 0);
  }
  return out;
}

std::string recurrence_csv(const RecurrenceTable& table, const std::vector<std::optional<std::size_t>>* truth,
                           std::size_t tol) {
  if (truth && truth->size() != table.t1.size()) throw InvalidArgument("truth length does not match the table");
  std::string out = "i,t1,truth,within_tol\n";
  for (std::size_t i = 0; i < table.t1.size(); ++i) {
    const auto& t1 = table.t1[i];
    const std::optional<std::size_t> expected = truth ? (*truth)[i] : std::nullopt;
    std::string within;
    if (t1 && expected) {
      const std::size_t err = *t1 > *expected ? *t1 - *expected : *expected - *t1;
      within = err <= tol ? "1" : "0";
    }
    out += fmt::format("{},{},{},{}\n", i, t1 ? std::to_string(*t1) : std::string(),
                       expected ? std::to_string(*expected) : std::string(), within);
  }
  return out;
}

}  // namespace flowph::io
