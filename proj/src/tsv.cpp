#include "genst/tsv.hpp"

#include <ostream>

#include "genst/errors.hpp"

namespace genst {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

static std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

static std::string join_tabs(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += '\t';
    out += fields[i];
  }
  return out;
}

std::vector<TsvRow> read_tsv(std::istream& in,
                             const std::vector<std::string>& header) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("missing header: expected `" + join_tabs(header) + "`");
  line = strip_cr(line);
  if (split_tabs(line) != header)
    throw ParseError("missing header: expected `" + join_tabs(header) +
                     "`, got `" + line + "`");

  std::vector<TsvRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;  // tolerate a trailing blank line
    TsvRow row{line_no, split_tabs(line)};
    if (row.fields.size() != header.size())
      throw ParseError("malformed line " + std::to_string(line_no) +
                       ": expected " + std::to_string(header.size()) +
                       " columns, got " + std::to_string(row.fields.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_tsv_line(std::ostream& out, const std::vector<std::string>& fields) {
  out << join_tabs(fields) << '\n';
}

}  // namespace genst
