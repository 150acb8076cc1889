#pragma once

#include <string>
#include <vector>

namespace trajnet {

struct CsvRow {
  long line = 0;  // 1-based line number in the source file
  std::vector<std::string> cells;
};

struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Column index of `name`; throws ParseError naming the file when absent.
  std::size_t column(const std::string& name) const;
};

/// Reads a comma-separated file with a header line. Double-quoted fields may
/// contain commas; surrounding whitespace is trimmed. Blank lines are skipped.
CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a numeric cell; an empty cell (or NA) yields NaN.
double parse_cell(const std::string& cell, const std::string& path, long line);

/// Shortest round-trip decimal text for a double.
std::string format_double(double x);

}  // namespace trajnet
