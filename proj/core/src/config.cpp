#include "posefuse/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace posefuse {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string parse_string_literal(const std::string& raw, int line_no) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
    throw IoError("toml line " + std::to_string(line_no) + ": bad string " + raw);
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 2 < raw.size()) {
      ++i;
      switch (raw[i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: out.push_back(raw[i]);
      }
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

bool looks_like_int(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  return std::all_of(s.begin() + i, s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

TomlTable::Value parse_scalar(const std::string& raw, int line_no) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (!raw.empty() && raw.front() == '"') return parse_string_literal(raw, line_no);
  if (looks_like_int(raw)) return static_cast<std::int64_t>(std::stoll(raw));
  try {
    std::size_t used = 0;
    const double d = std::stod(raw, &used);
    if (used == raw.size()) return d;
  } catch (...) {
  }
  throw IoError("toml line " + std::to_string(line_no) + ": cannot parse value " + raw);
}

TomlTable::Value parse_array(const std::string& raw, int line_no) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '"' && raw[i - 1] != '\\') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) items.push_back(trim(cur));

  if (!items.empty() && !items[0].empty() && items[0].front() == '"') {
    std::vector<std::string> out;
    for (const auto& it : items) out.push_back(parse_string_literal(it, line_no));
    return out;
  }
  std::vector<double> out;
  for (const auto& it : items) {
    const auto v = parse_scalar(it, line_no);
    if (std::holds_alternative<double>(v))
      out.push_back(std::get<double>(v));
    else if (std::holds_alternative<std::int64_t>(v))
      out.push_back(static_cast<double>(std::get<std::int64_t>(v)));
    else
      throw IoError("toml line " + std::to_string(line_no) + ": mixed array");
  }
  return out;
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw IoError("toml line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("toml line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    if (key.empty() || raw.empty())
      throw IoError("toml line " + std::to_string(line_no) + ": empty key or value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!raw.empty() && raw.front() == '[')
      table.values_[full] = parse_array(raw, line_no);
    else
      table.values_[full] = parse_scalar(raw, line_no);
  }
  return table;
}

TomlTable TomlTable::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse(text);
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const bool* b = std::get_if<bool>(&it->second)) return *b;
  throw IoError("toml key " + key + ": expected boolean");
}

std::int64_t TomlTable::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  throw IoError("toml key " + key + ": expected integer");
}

double TomlTable::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second))
    return static_cast<double>(*i);
  throw IoError("toml key " + key + ": expected number");
}

std::string TomlTable::get_string(const std::string& key,
                                  const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw IoError("toml key " + key + ": expected string");
}

std::vector<double> TomlTable::get_doubles(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return {};
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  throw IoError("toml key " + key + ": expected number array");
}

}  // namespace posefuse
