#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dualhead {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line on which the record starts
};

// RFC 4180 style: comma separated, double-quote quoting with "" escapes,
// quoted fields may hold commas and line breaks, CRLF or LF endings. A
// leading UTF-8 byte-order mark is skipped. Throws DataError on malformed quoting.
std::vector<CsvRecord> parse_csv(std::string_view content);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace dualhead
