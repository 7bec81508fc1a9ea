#include <array>
#include <charconv>
#include <fstream>
#include <string>

#include "vecchia/error.hpp"
#include "vecchia/io.hpp"

namespace vecchia::io {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

std::optional<std::size_t> NumericTable::find(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  return std::nullopt;
}

std::size_t NumericTable::index_of(std::string_view name) const {
  if (auto c = find(name)) return *c;
  fail(ErrorCode::MissingColumn, "column '" + std::string(name) + "' not found");
}

std::vector<double> NumericTable::column(std::string_view name) const {
  const std::size_t c = index_of(name);
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = values[r * cols() + c];
  return out;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  const std::string where = path.string() + ":";

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (const auto field : split(line)) table.header.emplace_back(trim(field));
    break;
  }
  if (table.header.empty()) fail(ErrorCode::ParseError, where + " missing header row");

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != table.cols()) {
      fail(ErrorCode::ParseError, where + std::to_string(line_no) + ": expected " +
                                      std::to_string(table.cols()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string_view cell = trim(fields[c]);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        fail(ErrorCode::ParseError, where + std::to_string(line_no) + ": column '" +
                                        table.header[c] + "' has non-numeric value '" +
                                        std::string(cell) + "'");
      }
      table.values.push_back(value);
    }
    ++table.rows;
  }
  return table;
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) fail(ErrorCode::IoError, "cannot format value");
  return std::string(buf.data(), ptr);
}

void write_numeric_csv(const std::filesystem::path& path, const NumericTable& table) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (c) out << ',';
    out << table.header[c];
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows; ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (c) out << ',';
      out << format_double(table.values[r * table.cols() + c]);
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<std::string> resolve_location_columns(const NumericTable& table,
                                                  const ColumnSpec& spec) {
  if (!spec.locs.empty()) return spec.locs;
  std::vector<std::string> out;
  for (const auto& name : table.header) {
    if (name.rfind("loc", 0) == 0) out.push_back(name);
  }
  if (out.empty() && table.find("lon") && table.find("lat")) out = {"lon", "lat"};
  if (out.empty()) {
    fail(ErrorCode::MissingColumn, "no location columns (name them loc*, lon/lat, or pass "
                                   "them explicitly)");
  }
  return out;
}

Dataset dataset_from_table(const NumericTable& table, const ColumnSpec& spec, bool require_y) {
  Dataset ds;
  const std::size_t n = table.rows;
  if (require_y || table.find(spec.y)) ds.y = table.column(spec.y);

  const std::size_t p = spec.x.size() + (spec.intercept ? 1 : 0);
  ds.X = Matrix(n, p);
  std::vector<std::size_t> xcols;
  for (const auto& name : spec.x) xcols.push_back(table.index_of(name));
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t c = 0;
    if (spec.intercept) ds.X(r, c++) = 1.0;
    for (const std::size_t src : xcols) ds.X(r, c++) = table.values[r * table.cols() + src];
  }

  const auto loc_names = resolve_location_columns(table, spec);
  ds.locs = Matrix(n, loc_names.size());
  for (std::size_t c = 0; c < loc_names.size(); ++c) {
    const std::size_t src = table.index_of(loc_names[c]);
    for (std::size_t r = 0; r < n; ++r) ds.locs(r, c) = table.values[r * table.cols() + src];
  }
  return ds;
}

Dataset read_csv_dataset(const std::filesystem::path& path, const ColumnSpec& spec) {
  Dataset ds = dataset_from_table(read_numeric_csv(path), spec, true);
  validate_dataset(ds);
  return ds;
}

void write_csv_dataset(const std::filesystem::path& path, const Dataset& ds,
                       const ColumnSpec& spec) {
  const std::size_t offset = spec.intercept ? 1 : 0;
  if (ds.p() != spec.x.size() + offset) {
    fail(ErrorCode::DimensionMismatch, "column spec does not match the design matrix");
  }
  std::vector<std::string> loc_names = spec.locs;
  if (loc_names.empty()) {
    for (std::size_t c = 0; c < ds.d(); ++c) loc_names.push_back("loc" + std::to_string(c + 1));
  }
  if (loc_names.size() != ds.d()) {
    fail(ErrorCode::DimensionMismatch, "column spec does not match the locations");
  }
  NumericTable table;
  table.header.push_back(spec.y);
  for (const auto& name : spec.x) table.header.push_back(name);
  for (const auto& name : loc_names) table.header.push_back(name);
  table.rows = ds.n();
  for (std::size_t r = 0; r < ds.n(); ++r) {
    table.values.push_back(ds.y[r]);
    for (std::size_t c = offset; c < ds.p(); ++c) table.values.push_back(ds.X(r, c));
    for (std::size_t c = 0; c < ds.d(); ++c) table.values.push_back(ds.locs(r, c));
  }
  write_numeric_csv(path, table);
}

}  // namespace vecchia::io
