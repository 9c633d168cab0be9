#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poleval {

// Flat key-value run configuration.
//
// Grammar (one entry per line):
//   key = value
// Keys are dotted identifiers (e.g. column.age.role, forest.n_trees).
// Blank lines and lines whose first non-space character is '#' are ignored.
// A later assignment to the same key overrides the earlier one, which is how
// CLI flags layer on top of file values.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;

  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  // Keys sorted lexicographically, one "key = value" per line. This is the
  // byte string the config hash is computed over.
  std::string canonical() const;

  // FNV-1a 64-bit over canonical(), rendered as 16 hex digits.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  // Keys matching "column.<name>.<field>", in key order.
  std::vector<std::string> column_names() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace poleval
