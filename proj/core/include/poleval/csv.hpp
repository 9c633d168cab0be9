#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace poleval::csv {

// Parsed CSV: first record is the header, remaining records are rows.
// Leading lines starting with '#' are collected as comments; poleval
// artifacts use them to embed tool version, config hash and seed.
struct Table {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 parser (quoted fields, "" escapes, CRLF or LF terminators).
Table parse(const std::string& text);
Table read_file(const std::filesystem::path& path);

// Quotes a field iff it contains a comma, quote or line break.
std::string escape(const std::string& field);

std::string format(const Table& table);
void write_file(const std::filesystem::path& path, const Table& table);

}  // namespace poleval::csv
