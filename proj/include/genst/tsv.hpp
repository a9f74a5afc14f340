#pragma once

#include <istream>
#include <string>
#include <vector>

namespace genst {

// Minimal strict TSV layer shared by all four on-disk formats.
// UTF-8, LF line endings (CR stripped on read), literal header line required,
// fixed column count per row. No quoting or escaping.
struct TsvRow {
  size_t line_no;  // 1-based, header is line 1
  std::vector<std::string> fields;
};

// Reads and validates the whole table. Throws ParseError on a missing or
// wrong header or on a row with the wrong column count.
std::vector<TsvRow> read_tsv(std::istream& in,
                             const std::vector<std::string>& header);

std::vector<std::string> split_tabs(const std::string& line);

void write_tsv_line(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace genst
