#ifndef PLANPROBE_CONFIG_HPP
#define PLANPROBE_CONFIG_HPP

// Sectioned key-value configuration files:
//
//   # comment
//   [grid]
//   hidden_sizes = [1, 16, 128]
//   name = "planted"
//
// Keys are addressed as "section.key". Values are scalars (bare or quoted) or
// flat bracketed lists. The hash covers the canonical form, so comments,
// whitespace and key order do not change it.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "planprobe/error.hpp"
#include "planprobe/labeling.hpp"
#include "planprobe/sha256.hpp"

namespace planprobe {

class Config {
 public:
  struct Value {
    bool is_list = false;
    std::vector<std::string> items;
    int line = 0;
  };

  static Config parse(std::string_view text, std::string origin = "<config>") {
    Config c;
    c.origin_ = std::move(origin);
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      const auto line = detail::trim(strip_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') c.error(line_no, "unterminated section header");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) c.error(line_no, "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) c.error(line_no, "expected key = value");
      const auto key = std::string(detail::trim(line.substr(0, eq)));
      if (key.empty()) c.error(line_no, "missing key");
      const auto full = section.empty() ? key : section + "." + key;
      if (c.values_.count(full)) c.error(line_no, "duplicate key " + full);
      c.values_[full] = c.parse_value(detail::trim(line.substr(eq + 1)), line_no);
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    return parse(detail::read_text_file(path), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  std::string get_string(const std::string& key, std::string fallback = {}) const {
    const auto* v = scalar(key);
    return v ? *v : fallback;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto* v = scalar(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto* v = scalar(key);
    return v ? to_int(key, *v) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto* v = scalar(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(ErrorKind::kConfig, where(key) + ": expected true or false, got '" + *v + "'");
  }

  std::optional<std::vector<std::string>> get_list(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second.items;
  }

  std::optional<std::vector<std::int64_t>> get_int_list(const std::string& key) const {
    auto items = get_list(key);
    if (!items) return std::nullopt;
    std::vector<std::int64_t> out;
    for (const auto& s : *items) out.push_back(to_int(key, s));
    return out;
  }

  /// Rejects keys outside `known` (typos would otherwise be silently ignored).
  void require_known(const std::vector<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      bool ok = false;
      for (const auto& n : known) ok = ok || n == k;
      if (!ok) fail(ErrorKind::kConfig, origin_ + ":" + std::to_string(v.line) + ": unknown key " + k);
    }
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      out += k + " = ";
      if (v.is_list) out += "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        out += v.items[i];
      }
      if (v.is_list) out += "]";
      out += "\n";
    }
    return out;
  }

  std::string hash() const { return sha256_hex(canonical()); }

  const std::string& origin() const { return origin_; }

 private:
  static std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }

  [[noreturn]] void error(int line, const std::string& msg) const {
    fail(ErrorKind::kConfig, origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::string parse_scalar(std::string_view s, int line) const {
    s = detail::trim(s);
    if (s.empty()) error(line, "empty value");
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') error(line, "unterminated string");
      return std::string(s.substr(1, s.size() - 2));
    }
    return std::string(s);
  }

  Value parse_value(std::string_view s, int line) const {
    Value v;
    v.line = line;
    if (!s.empty() && s.front() == '[') {
      if (s.back() != ']') error(line, "unterminated list");
      v.is_list = true;
      const auto body = detail::trim(s.substr(1, s.size() - 2));
      std::size_t start = 0;
      while (!body.empty() && start <= body.size()) {
        const auto comma = body.find(',', start);
        const auto item = body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        v.items.push_back(parse_scalar(item, line));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      return v;
    }
    v.items.push_back(parse_scalar(s, line));
    return v;
  }

  const std::string* scalar(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    if (it->second.is_list) fail(ErrorKind::kConfig, where(key) + ": expected a single value, got a list");
    return &it->second.items.front();
  }

  std::string where(const std::string& key) const {
    const auto it = values_.find(key);
    return origin_ + ":" + std::to_string(it == values_.end() ? 0 : it->second.line) + ": " + key;
  }

  double to_double(const std::string& key, const std::string& s) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::kConfig, where(key) + ": expected a number, got '" + s + "'");
  }

  std::int64_t to_int(const std::string& key, const std::string& s) const {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(ErrorKind::kConfig, where(key) + ": expected an integer, got '" + s + "'");
    }
    return v;
  }

  std::string origin_;
  std::map<std::string, Value> values_;
};

}  // namespace planprobe

#endif  // PLANPROBE_CONFIG_HPP
