#pragma once

#include "digs/csv.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace digs {

/// Flat key-value configuration with [section] headers; keys are stored as
/// "section.key". The same dialect is used for run manifests, so a manifest
/// re-runs as a config.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    out[key] = value;
  }
  return out;
}

inline ConfigMap load_config(const std::string& path) { return parse_config_text(read_file(path)); }

/// Serializes grouped by section with sorted keys; output is deterministic.
inline std::string serialize_config(const ConfigMap& cfg) {
  std::string out;
  std::string section;
  bool first = true;
  for (const auto& [key, value] : cfg) {
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section || first) {
      if (!first) out += '\n';
      if (!sec.empty()) out += "[" + sec + "]\n";
      section = sec;
      first = false;
    }
    out += name + " = " + value + "\n";
  }
  return out;
}

/// Typed accessors. Every parse failure names the offending field.
class ConfigView {
 public:
  explicit ConfigView(ConfigMap cfg) : cfg_(std::move(cfg)) {}

  const ConfigMap& map() const { return cfg_; }
  bool has(const std::string& key) const { return cfg_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = cfg_.find(key);
    return it == cfg_.end() ? fallback : it->second;
  }
  std::string require_string(const std::string& key) const {
    auto it = cfg_.find(key);
    if (it == cfg_.end() || it->second.empty())
      throw std::invalid_argument("config: missing required field '" + key + "'");
    return it->second;
  }
  double get_double(const std::string& key, double fallback) const {
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return fallback;
    return parse_field_double(key, it->second);
  }
  long long get_int(const std::string& key, long long fallback) const {
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: field '" + key + "' is not an integer: '" +
                                  it->second + "'");
    }
  }
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: field '" + key + "' is not a seed value: '" +
                                  it->second + "'");
    }
  }
  bool get_bool(const std::string& key, bool fallback) const {
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config: field '" + key + "' is not a boolean: '" + it->second +
                                "'");
  }
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = cfg_.find(key);
    if (it == cfg_.end()) return out;
    std::istringstream is(it->second);
    std::string token;
    while (is >> token) out.push_back(token);
    return out;
  }
  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& token : get_list(key)) out.push_back(parse_field_double(key, token));
    return out;
  }
  std::vector<int> get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& token : get_list(key)) {
      try {
        out.push_back(std::stoi(token));
      } catch (const std::exception&) {
        throw std::invalid_argument("config: field '" + key + "' has non-integer entry '" + token +
                                    "'");
      }
    }
    return out;
  }

 private:
  double parse_field_double(const std::string& key, const std::string& value) const {
    try {
      return parse_double(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: field '" + key + "' is not a number: '" + value + "'");
    }
  }

  ConfigMap cfg_;
};

/// The convexity constant may be given numerically or in the formula form the
/// experiments use: "a/eps + omega0" or "a/eps" (whitespace optional).
inline double resolve_convexity_constant(const std::string& value, double epsilon, double omega0) {
  std::string compact;
  for (char ch : value)
    if (!std::isspace(static_cast<unsigned char>(ch))) compact += ch;
  const auto slash = compact.find("/eps");
  if (slash == std::string::npos) {
    try {
      return parse_double(compact);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: field 'solver.c' is neither a number nor 'a/eps+omega0': '" +
                                  value + "'");
    }
  }
  double a;
  try {
    a = parse_double(compact.substr(0, slash));
  } catch (const std::exception&) {
    throw std::invalid_argument("config: field 'solver.c' has a bad coefficient: '" + value + "'");
  }
  std::string rest = compact.substr(slash + 4);
  double c = a / epsilon;
  if (rest == "+omega0")
    c += omega0;
  else if (!rest.empty())
    throw std::invalid_argument("config: field 'solver.c' has a bad suffix: '" + value + "'");
  return c;
}

}  // namespace digs
