#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "posefuse/errors.hpp"

namespace posefuse {

// Minimal TOML reader covering what the CLI config files use: [section]
// headers (dotting allowed), key = value with strings, integers, floats,
// booleans, and flat arrays. Keys are flattened to "section.key".
class TomlTable {
 public:
  using Value = std::variant<bool, std::int64_t, double, std::string,
                             std::vector<double>, std::vector<std::string>>;

  static TomlTable parse(const std::string& text);
  static TomlTable parse_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  bool get_bool(const std::string& key, bool fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::map<std::string, Value>& values() const { return values_; }

 private:
  std::map<std::string, Value> values_;
};

}  // namespace posefuse
