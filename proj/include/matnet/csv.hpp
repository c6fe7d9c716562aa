#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace matnet {

/// RFC-4180 table: header row plus records of equal width.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line where each row starts

  std::size_t line_of(std::size_t row) const;

  /// Column position; throws DataError naming the file when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  /// Parses a numeric cell; DataError reports the 1-based line and column name.
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text, std::string source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
/// Shortest text that parses back to the same double; "NaN" and "inf" for
/// non-finite values.
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace matnet
