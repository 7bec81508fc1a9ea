#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vecchia/core.hpp"

namespace vecchia::io {

// Numeric CSV with a header row. Values are row-major.
struct NumericTable {
  std::vector<std::string> header;
  std::size_t rows = 0;
  std::vector<double> values;

  std::size_t cols() const noexcept { return header.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  // Throws MissingColumn.
  std::size_t index_of(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
};

// Throws IoError, ParseError (with the 1-based file line) for empty or
// non-numeric cells including "NA", and for ragged rows.
NumericTable read_numeric_csv(const std::filesystem::path& path);
void write_numeric_csv(const std::filesystem::path& path, const NumericTable& table);

// Shortest decimal that parses back to the same double.
std::string format_double(double value);

struct ColumnSpec {
  std::string y = "y";
  std::vector<std::string> x;
  // empty: every column whose name starts with "loc", else lon,lat
  std::vector<std::string> locs;
  bool intercept = false;  // prepend an all-ones column to X
};

std::vector<std::string> resolve_location_columns(const NumericTable& table,
                                                  const ColumnSpec& spec);

// Column-selected dataset; with require_y=false a missing response column
// yields an empty y (prediction inputs).
Dataset dataset_from_table(const NumericTable& table, const ColumnSpec& spec,
                           bool require_y = true);

// Reads and validates.
Dataset read_csv_dataset(const std::filesystem::path& path, const ColumnSpec& spec);

// Inverse of dataset_from_table for the columns named in `spec` (intercept
// column omitted).
void write_csv_dataset(const std::filesystem::path& path, const Dataset& ds,
                       const ColumnSpec& spec);

}  // namespace vecchia::io
