// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config.hpp
 * @brief  Flat key=value configuration files and typed lookups.
 *
 * Lines are `key = value`; blank lines and lines starting with '#' are
 * ignored. Keys are matched against a schema so typos are rejected with the
 * offending key named.
 */

#ifndef DESTRIPE_CONFIG_HPP_
#define DESTRIPE_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace destripe {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream &in, const std::string &origin) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key=value");
    const auto key = trim(t.substr(0, eq));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

inline KeyValues load_key_values(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config '" + path + "'");
  return parse_key_values(in, path);
}

inline void write_key_values(std::ostream &os, const KeyValues &kv) {
  for (const auto &[k, v] : kv)
    os << k << '=' << v << '\n';
}

/// Rejects keys not in the schema.
inline void check_keys(const KeyValues &kv, const std::vector<ConfigKey> &schema,
                       const std::string &origin) {
  for (const auto &[k, v] : kv) {
    bool known = false;
    for (const auto &key : schema)
      known = known || key.name == k;
    if (!known)
      throw ConfigError(origin + ": unknown key '" + k + "'");
  }
}

inline const std::string &get(const KeyValues &kv, const std::string &key) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

inline double get_double(const KeyValues &kv, const std::string &key) {
  const auto &s = get(kv, key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  }
}

inline std::uint64_t get_u64(const KeyValues &kv, const std::string &key) {
  const auto &s = get(kv, key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s +
                      "' is not a non-negative integer");
  return v;
}

inline std::size_t get_size(const KeyValues &kv, const std::string &key) {
  return static_cast<std::size_t>(get_u64(kv, key));
}

inline bool get_bool(const KeyValues &kv, const std::string &key) {
  const auto &s = get(kv, key);
  if (s == "1" || s == "true" || s == "yes")
    return true;
  if (s == "0" || s == "false" || s == "no")
    return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
}

/// Comma-separated list of positive integers, e.g. "2,3,4".
inline std::vector<std::size_t> parse_size_list(const std::string &s,
                                                const std::string &key) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw ConfigError("key '" + key + "': bad list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError("key '" + key + "': empty list");
  return out;
}

} // namespace destripe

#endif // DESTRIPE_CONFIG_HPP_
