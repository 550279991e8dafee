#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace prco {

// Flat `key = value` configuration with [section] headers. '#' starts a
// comment; keys are addressed as "section.key". Later assignments and
// overrides win.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  // Applies "section.key=value" override strings (CLI --set).
  void apply_override(const std::string& assignment);

  // Overlays another config's values on top of this one.
  void merge(const KeyValueConfig& other) {
    for (const auto& [key, value] : other.values_) values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::vector<int> get_int_list(const std::string& key, std::span<const int> fallback) const;

  // Keys that were never read; used to reject typos after binding.
  std::vector<std::string> unread_keys() const;

  std::string dump() const;

 private:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> read_;
};

}  // namespace prco
