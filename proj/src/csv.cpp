#include "matnet/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "matnet/error.hpp"

namespace matnet {

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError(source + ": missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::size_t CsvTable::line_of(std::size_t row) const { return row < lines.size() ? lines[row] : row + 2; }

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row)[col];
  if (s == "NaN" || s == "nan" || s == "NA" || s.empty()) return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError(source + ": line " + std::to_string(line_of(row)) + ", column '" + header[col] +
                    "': not a number: '" + s + "'");
  return v;
}

long long CsvTable::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row)[col];
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError(source + ": line " + std::to_string(line_of(row)) + ", column '" + header[col] +
                    "': not an integer: '" + s + "'");
  return v;
}

CsvTable parse_csv(std::string_view text, std::string source) {
  CsvTable table;
  table.source = std::move(source);
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> starts;  // first physical line of each record
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, record_start = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) {  // skip blank lines
      records.push_back(std::move(record));
      starts.push_back(record_start);
    }
    record.clear();
  };

  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty())
          throw DataError(table.source + ": line " + std::to_string(line) + ": stray quote");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        record_start = ++line;
        break;
      default:
        field += c;
    }
  }
  if (quoted) throw DataError(table.source + ": unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();

  if (records.empty()) throw DataError(table.source + ": empty file");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size())
      throw DataError(table.source + ": line " + std::to_string(starts[r]) + " has " +
                      std::to_string(records[r].size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    table.rows.push_back(std::move(records[r]));
    table.lines.push_back(starts[r]);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out_ << ',';
    out_ << csv_escape(fields[k]);
  }
  out_ << '\n';
}

}  // namespace matnet
