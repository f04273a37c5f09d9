#pragma once

#include "har/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace har {

// Layered plain-text key-value configuration.
//
// Syntax: one `key = value` per line, `#` starts a comment, blank lines
// ignored, dotted keys express sections (`profile.read.saccade_rate = 8`).
// Later layers win: defaults < config file < --set overrides.
//
// The run provenance hash is FNV-1a 64 over the canonicalized text (keys
// sorted, whitespace and comments stripped), so formatting and key order do
// not perturb it.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_text(std::string_view text, std::string_view origin = "<text>");

  void set(std::string key, std::string value);
  // Accepts the --set form "key=value"; throws InvalidConfig otherwise.
  void apply_override(std::string_view keyval);
  // Overlays `other` on top of this config (other wins on conflicts).
  void merge_from(const Config& other);

  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  std::string canonical_text() const;
  std::uint64_t hash() const { return fnv1a64(canonical_text()); }
  std::string hash_hex() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  double parse_double(const std::string& key, const std::string& raw) const;
  std::map<std::string, std::string> entries_;
};

}  // namespace har
