#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nvdesign/errors.hpp"

namespace nvdesign::toml {

// Parser for the TOML subset used by run configs: [table], [[array.of.tables]],
// key = value with strings, integers, floats, booleans and single-line arrays
// of those, plus # comments.

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> v;
  int line = 0;

  bool is_number() const { return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v); }
};

struct Table {
  std::string name;  // "" for the root table
  int line = 0;
  std::map<std::string, Value> entries;
};

struct Document {
  Table root;
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> table_arrays;
};

class ParseError : public ConfigError {
 public:
  ParseError(int line, const std::string& msg)
      : ConfigError("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

class ValueParser {
 public:
  ValueParser(std::string_view s, int line) : s_(s), line_(line) {}

  Value parse_all() {
    Value v = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& m) const { throw ParseError(line_, m); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Value parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return {parse_string(), line_};
    if (c == '[') return {parse_array(), line_};
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true, line_};
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false, line_};
    }
    return parse_number();
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  Array parse_array() {
    ++pos_;
    Array out;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(parse());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value parse_number() {
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != ' ' && s_[end] != '\t') ++end;
    std::string tok;
    for (char c : s_.substr(pos_, end - pos_)) {
      if (c != '_') tok.push_back(c);
    }
    if (tok.empty()) fail("missing value");
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (*b == '+') ++b;
    const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "nan";
    if (!is_float) {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(b, e, i);
      if (ec != std::errc{} || p != e) fail("invalid value '" + tok + "'");
      pos_ = end;
      return {i, line_};
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(b, e, d);
    if (ec != std::errc{} || p != e) fail("invalid value '" + tok + "'");
    pos_ = end;
    return {d, line_};
  }

  std::string_view s_;
  int line_;
  std::size_t pos_ = 0;
};

inline std::string_view strip_comment(std::string_view line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

}  // namespace detail

inline Document parse(std::string_view text) {
  Document doc;
  Table* current = &doc.root;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;

    if (line.starts_with("[[")) {
      if (!line.ends_with("]]")) throw ParseError(line_no, "malformed array-of-tables header");
      const std::string name(detail::trim(line.substr(2, line.size() - 4)));
      if (!detail::is_bare_key(name)) throw ParseError(line_no, "invalid table name '" + name + "'");
      if (doc.tables.contains(name)) throw ParseError(line_no, "'" + name + "' already defined as a table");
      auto& arr = doc.table_arrays[name];
      arr.push_back(Table{name, line_no, {}});
      current = &arr.back();
      continue;
    }
    if (line.starts_with('[')) {
      if (!line.ends_with(']')) throw ParseError(line_no, "malformed table header");
      const std::string name(detail::trim(line.substr(1, line.size() - 2)));
      if (!detail::is_bare_key(name)) throw ParseError(line_no, "invalid table name '" + name + "'");
      if (doc.tables.contains(name) || doc.table_arrays.contains(name)) {
        throw ParseError(line_no, "table '" + name + "' defined twice");
      }
      current = &doc.tables.emplace(name, Table{name, line_no, {}}).first->second;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (!detail::is_bare_key(key)) throw ParseError(line_no, "invalid key '" + key + "'");
    if (current->entries.contains(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
    current->entries.emplace(key, detail::ValueParser(detail::trim(line.substr(eq + 1)), line_no).parse_all());
  }
  return doc;
}

}  // namespace nvdesign::toml
