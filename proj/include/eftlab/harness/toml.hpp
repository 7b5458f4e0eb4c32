#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eftlab/errors.hpp"

namespace eftlab {

// Minimal TOML subset sufficient for experiment configs: [section] headers,
// key = value lines, integers, floats, booleans, quoted strings and (nested)
// arrays, with # comments. Keys are exposed flattened as "section.key".
class TomlValue {
 public:
  enum class Kind { kInt, kFloat, kBool, kString, kArray };

  Kind kind = Kind::kInt;
  std::int64_t int_value = 0;
  double float_value = 0.0;
  bool bool_value = false;
  std::string string_value;
  std::vector<TomlValue> array;

  double as_double() const {
    if (kind == Kind::kFloat) return float_value;
    if (kind == Kind::kInt) return static_cast<double>(int_value);
    throw ParseError("TOML value is not a number");
  }

  std::int64_t as_int() const {
    if (kind == Kind::kInt) return int_value;
    throw ParseError("TOML value is not an integer");
  }

  bool as_bool() const {
    if (kind == Kind::kBool) return bool_value;
    throw ParseError("TOML value is not a boolean");
  }

  const std::string& as_string() const {
    if (kind == Kind::kString) return string_value;
    throw ParseError("TOML value is not a string");
  }
};

class TomlTable {
 public:
  static TomlTable parse(const std::string& text) {
    TomlTable table;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string s = strip_comment(line);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ParseError("TOML line " + std::to_string(line_no) +
                           ": unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty())
          throw ParseError("TOML line " + std::to_string(line_no) +
                           ": empty section name");
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ParseError("TOML line " + std::to_string(line_no) +
                         ": expected key = value");
      std::string key = trim(s.substr(0, eq));
      std::string value_text = trim(s.substr(eq + 1));
      // Multi-line arrays: keep consuming until brackets balance.
      while (bracket_depth(value_text) > 0 && std::getline(in, line)) {
        ++line_no;
        value_text += " " + trim(strip_comment(line));
      }
      if (key.empty())
        throw ParseError("TOML line " + std::to_string(line_no) +
                         ": empty key");
      std::size_t pos = 0;
      TomlValue v = parse_value(value_text, pos, line_no);
      skip_ws(value_text, pos);
      if (pos != value_text.size())
        throw ParseError("TOML line " + std::to_string(line_no) +
                         ": trailing characters after value");
      std::string full = section.empty() ? key : section + "." + key;
      table.values_[full] = std::move(v);
    }
    return table;
  }

  static TomlTable parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const TomlValue& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ParseError("missing TOML key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? at(key).as_double() : fallback;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? at(key).as_int() : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    return has(key) ? at(key).as_bool() : fallback;
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    return has(key) ? at(key).as_string() : fallback;
  }

  std::vector<double> get_double_array(const std::string& key) const {
    std::vector<double> out;
    for (const auto& v : at(key).array) out.push_back(v.as_double());
    return out;
  }

  std::vector<std::int64_t> get_int_array(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& v : at(key).array) out.push_back(v.as_int());
    return out;
  }

  std::vector<std::string> get_string_array(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& v : at(key).array) out.push_back(v.as_string());
    return out;
  }

  // Array of [lo, hi] pairs.
  std::vector<std::vector<double>> get_double_matrix(
      const std::string& key) const {
    std::vector<std::vector<double>> out;
    for (const auto& row : at(key).array) {
      if (row.kind != TomlValue::Kind::kArray)
        throw ParseError("TOML key '" + key + "' is not an array of arrays");
      std::vector<double> r;
      for (const auto& v : row.array) r.push_back(v.as_double());
      out.push_back(std::move(r));
    }
    return out;
  }

  const std::map<std::string, TomlValue>& values() const { return values_; }

 private:
  static std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static int bracket_depth(const std::string& s) {
    int depth = 0;
    bool in_string = false;
    for (char c : s) {
      if (c == '"') in_string = !in_string;
      if (in_string) continue;
      if (c == '[') ++depth;
      if (c == ']') --depth;
    }
    return depth;
  }

  static void skip_ws(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }

  static TomlValue parse_value(const std::string& s, std::size_t& pos,
                               int line_no) {
    skip_ws(s, pos);
    if (pos >= s.size())
      throw ParseError("TOML line " + std::to_string(line_no) +
                       ": missing value");
    const char c = s[pos];
    TomlValue v;
    if (c == '[') {
      ++pos;
      v.kind = TomlValue::Kind::kArray;
      skip_ws(s, pos);
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return v;
      }
      for (;;) {
        v.array.push_back(parse_value(s, pos, line_no));
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
          skip_ws(s, pos);
          if (pos < s.size() && s[pos] == ']') {  // trailing comma
            ++pos;
            return v;
          }
          continue;
        }
        if (pos < s.size() && s[pos] == ']') {
          ++pos;
          return v;
        }
        throw ParseError("TOML line " + std::to_string(line_no) +
                         ": expected ',' or ']' in array");
      }
    }
    if (c == '"') {
      auto end = s.find('"', pos + 1);
      if (end == std::string::npos)
        throw ParseError("TOML line " + std::to_string(line_no) +
                         ": unterminated string");
      v.kind = TomlValue::Kind::kString;
      v.string_value = s.substr(pos + 1, end - pos - 1);
      pos = end + 1;
      return v;
    }
    if (s.compare(pos, 4, "true") == 0) {
      v.kind = TomlValue::Kind::kBool;
      v.bool_value = true;
      pos += 4;
      return v;
    }
    if (s.compare(pos, 5, "false") == 0) {
      v.kind = TomlValue::Kind::kBool;
      v.bool_value = false;
      pos += 5;
      return v;
    }
    // Number: integer unless it contains '.', 'e', 'inf' or 'nan'.
    std::size_t end = pos;
    while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end])) &&
           s[end] != ',' && s[end] != ']')
      ++end;
    std::string tok = s.substr(pos, end - pos);
    if (tok.empty())
      throw ParseError("TOML line " + std::to_string(line_no) +
                       ": missing value");
    const bool is_float = tok.find_first_of(".eEin") != std::string::npos;
    try {
      if (is_float) {
        v.kind = TomlValue::Kind::kFloat;
        v.float_value = std::stod(tok);
      } else {
        v.kind = TomlValue::Kind::kInt;
        v.int_value = std::stoll(tok);
      }
    } catch (const std::exception&) {
      throw ParseError("TOML line " + std::to_string(line_no) +
                       ": bad value '" + tok + "'");
    }
    pos = end;
    return v;
  }

  std::map<std::string, TomlValue> values_;
};

}  // namespace eftlab
