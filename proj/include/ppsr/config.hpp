#pragma once

// Flat "key = value" configuration with dotted section prefixes, e.g.
//
//   # solver parameters
//   solver.scheme = red
//   solver.beta   = 0.2048
//
// Blank lines and lines starting with '#' are ignored. Later assignments
// override earlier ones, so command-line overrides are simply applied last.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppsr/errors.hpp"

namespace ppsr {

class Config {
 public:
  static Config parse(std::istream& is, std::string_view source = "<config>") {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string_view body = trim(line);
      if (body.empty() || body.front() == '#') continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key(trim(body.substr(0, eq)));
      if (key.empty()) throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": empty key");
      cfg.set(key, std::string(trim(body.substr(eq + 1))));
    }
    return cfg;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file " + path.string());
    return parse(is, path.string());
  }

  void set(const std::string& key, std::string value) {
    if (!values_.contains(key)) order_.push_back(key);
    values_[key] = std::move(value);
  }

  bool contains(const std::string& key) const { return values_.contains(key); }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
  }

  double get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": '" + *v + "' is not a number");
    return out;
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    long long out = 0;
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": '" + *v + "' is not an integer");
    return out;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key + ": '" + *v + "' is not a boolean");
  }

  /// Keys that are not in `known`.
  std::vector<std::string> unknown_keys(const std::vector<std::string_view>& known) const {
    std::vector<std::string> out;
    for (const auto& k : order_) {
      if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
    }
    return out;
  }

  /// Echo in first-assignment order, one "key = value" per line.
  void write(std::ostream& os) const {
    for (const auto& k : order_) os << k << " = " << values_.at(k) << '\n';
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace ppsr
