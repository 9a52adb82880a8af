#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "eldertrack/error.hpp"

namespace eldertrack::csv {

// Minimal comma-separated reader. Identifiers in every file format are
// plain tokens, so quoting is not supported and commas inside fields are
// rejected on write.

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline int to_int(std::string_view field, std::string_view what) {
  field = trim(field);
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(ErrorKind::Validation, "expected integer for " + std::string(what) + ", got '" + std::string(field) + "'");
  }
  return value;
}

inline std::string checked_token(std::string_view token, std::string_view what) {
  if (token.empty() || token.find_first_of(",\n\r\"") != std::string_view::npos) {
    fail(ErrorKind::Validation, "invalid " + std::string(what) + ": '" + std::string(token) + "'");
  }
  return std::string(token);
}

/// Reads non-empty lines; the first is returned separately as the header.
struct Table {
  std::string header;
  std::vector<std::string> rows;
};

inline Table read_table(std::istream& in) {
  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      table.header = line;
      have_header = true;
    } else {
      table.rows.push_back(line);
    }
  }
  return table;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open input file '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open output file '" + path + "'");
  return out;
}

}  // namespace eldertrack::csv
