#pragma once

// Minimal CSV helpers shared by the file readers. Fields never contain
// commas or quotes in any of the formats this library writes.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "seqmod/errors.hpp"

namespace seqmod::detail {

inline std::vector<std::string> split_fields(std::string_view line,
                                             char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    auto field = line.substr(start, pos == std::string_view::npos
                                        ? std::string_view::npos
                                        : pos - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Reads a CSV file, checks the header, and returns the data rows.
inline std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw FormatError(path.string() + ": expected header '" +
                      std::string(expected_header) + "', got '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_fields(line));
  }
  return rows;
}

std::size_t parse_index(const std::string& s, const std::string& what);
double parse_double(const std::string& s, const std::string& what);

}  // namespace seqmod::detail

#include <charconv>

namespace seqmod::detail {

/// Shortest decimal that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace seqmod::detail
