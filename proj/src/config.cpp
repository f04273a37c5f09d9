#include "har/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace har {
namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path);
}

Config Config::from_text(std::string_view text, std::string_view origin) {
  Config cfg;
  size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    ++lineno;
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

    size_t hash_at = line.find('#');
    if (hash_at != std::string_view::npos) line = line.substr(0, hash_at);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;

    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig(std::string(origin) + ":" + std::to_string(lineno) +
                          ": expected 'key = value', got '" + stripped + "'");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw InvalidConfig(std::string(origin) + ":" + std::to_string(lineno) +
                          ": empty key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

void Config::set(std::string key, std::string value) {
  entries_[std::move(key)] = std::move(value);
}

void Config::apply_override(std::string_view keyval) {
  size_t eq = keyval.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw InvalidConfig("--set expects key=value, got '" + std::string(keyval) + "'");
  }
  set(trim(keyval.substr(0, eq)), trim(keyval.substr(eq + 1)));
}

void Config::merge_from(const Config& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string Config::require_str(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidConfig("missing required config key: " + key);
  return it->second;
}

double Config::parse_double(const std::string& key, const std::string& raw) const {
  try {
    size_t used = 0;
    double v = std::stod(raw, &used);
    if (trim(std::string_view(raw).substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidConfig("config key '" + key + "' expects a number, got '" + raw + "'");
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double(key, it->second);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::int64_t v = 0;
  const std::string& raw = it->second;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || p != raw.data() + raw.size()) {
    throw InvalidConfig("config key '" + key + "' expects an integer, got '" + raw + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& raw = it->second;
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw InvalidConfig("config key '" + key + "' expects a boolean, got '" + raw + "'");
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first);
  }
  return out;
}

std::string Config::canonical_text() const {
  std::string out;  // std::map iterates in sorted key order already
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash()));
  return std::string(buf);
}

}  // namespace har
