#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace diloco::harness {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws ConfigError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

// RFC 4180: CRLF records, fields containing a comma, quote, CR or LF are
// quoted with embedded quotes doubled.
std::string quote_csv_field(std::string_view field);
std::string write_csv(const CsvTable& table);
// Accepts CRLF or LF record separators. Throws ConfigError on malformed
// quoting or ragged rows.
CsvTable parse_csv(std::string_view text);

void write_csv_file(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv_file(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

}  // namespace diloco::harness
