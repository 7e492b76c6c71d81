#ifndef GOSSIPEG_CONFIG_HPP_
#define GOSSIPEG_CONFIG_HPP_

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gossipeg/error.hpp"

namespace gossipeg {

/// Config error carrying the source location of the offending line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ConfigError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Sectioned key-value document:
///
///   # comment
///   [section]
///   key = value          ; lists are comma separated, optionally in [...]
class KeyValueDocument {
 public:
  struct Value {
    std::string text;
    std::size_t line = 0;
  };

  static KeyValueDocument parse(std::istream& in, std::string source = "<config>") {
    KeyValueDocument doc;
    doc.source_ = std::move(source);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip_comment(raw);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(doc.source_, lineno, "malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError(doc.source_, lineno, "empty section name");
        if (doc.section_lines_.count(section))
          throw ConfigError(doc.source_, lineno, "duplicate section [" + section + "]");
        doc.section_lines_[section] = lineno;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(doc.source_, lineno, "expected 'key = value'");
      if (section.empty()) throw ConfigError(doc.source_, lineno, "key outside of any section");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(doc.source_, lineno, "empty key");
      auto& entries = doc.values_[section];
      if (entries.count(key))
        throw ConfigError(doc.source_, lineno, "duplicate key '" + key + "' in [" + section + "]");
      entries[key] = Value{value, lineno};
    }
    return doc;
  }

  static KeyValueDocument parse_string(const std::string& text, std::string source = "<config>") {
    std::istringstream in(text);
    return parse(in, std::move(source));
  }

  static KeyValueDocument load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  const std::string& source() const noexcept { return source_; }
  bool has_section(const std::string& s) const { return section_lines_.count(s) != 0; }

  /// Rejects any section or key outside `allowed`.
  void check_schema(const std::map<std::string, std::set<std::string>>& allowed) const {
    for (const auto& [section, line] : section_lines_) {
      const auto it = allowed.find(section);
      if (it == allowed.end()) throw ConfigError(source_, line, "unknown section [" + section + "]");
      const auto vals = values_.find(section);
      if (vals == values_.end()) continue;
      for (const auto& [key, value] : vals->second)
        if (!it->second.count(key))
          throw ConfigError(source_, value.line, "unknown key '" + key + "' in [" + section + "]");
    }
  }

  const Value* find(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    if (s == values_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  std::optional<std::string> get_string(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return std::nullopt;
    return v->text;
  }

  std::optional<double> get_double(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return std::nullopt;
    return to_double(v->text, *v, key);
  }

  std::optional<long long> get_int(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return std::nullopt;
    return to_int(v->text, *v, key);
  }

  std::optional<bool> get_bool(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return std::nullopt;
    if (v->text == "true" || v->text == "1" || v->text == "yes") return true;
    if (v->text == "false" || v->text == "0" || v->text == "no") return false;
    throw ConfigError(source_, v->line, "'" + key + "' must be a boolean");
  }

  std::optional<std::vector<std::string>> get_list(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return std::nullopt;
    std::string text = v->text;
    if (!text.empty() && text.front() == '[') {
      if (text.back() != ']') throw ConfigError(source_, v->line, "unterminated list for '" + key + "'");
      text = text.substr(1, text.size() - 2);
    }
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ConfigError(source_, v->line, "empty list element in '" + key + "'");
      items.push_back(item);
    }
    if (items.empty()) throw ConfigError(source_, v->line, "empty list for '" + key + "'");
    return items;
  }

  std::optional<std::vector<double>> get_double_list(const std::string& section, const std::string& key) const {
    const auto items = get_list(section, key);
    if (!items) return std::nullopt;
    const Value& v = *find(section, key);
    std::vector<double> out;
    for (const auto& s : *items) out.push_back(to_double(s, v, key));
    return out;
  }

  std::optional<std::vector<long long>> get_int_list(const std::string& section, const std::string& key) const {
    const auto items = get_list(section, key);
    if (!items) return std::nullopt;
    const Value& v = *find(section, key);
    std::vector<long long> out;
    for (const auto& s : *items) out.push_back(to_int(s, v, key));
    return out;
  }

  /// Raises a located error for `section.key`, or at the section header when the key is absent.
  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    if (const Value* v = find(section, key)) throw ConfigError(source_, v->line, what);
    const auto s = section_lines_.find(section);
    if (s != section_lines_.end()) throw ConfigError(source_, s->second, what);
    throw ConfigError(source_ + ": " + what);
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  double to_double(const std::string& s, const Value& v, const std::string& key) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ConfigError(source_, v.line, "'" + key + "' expects a number, got '" + s + "'");
    return out;
  }

  long long to_int(const std::string& s, const Value& v, const std::string& key) const {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ConfigError(source_, v.line, "'" + key + "' expects an integer, got '" + s + "'");
    return out;
  }

  std::string source_;
  std::map<std::string, std::size_t> section_lines_;
  std::map<std::string, std::map<std::string, Value>> values_;
};

}  // namespace gossipeg

#endif  // GOSSIPEG_CONFIG_HPP_
