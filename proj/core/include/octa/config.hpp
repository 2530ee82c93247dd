#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace octa {

/// Sectioned key-value run configuration. Keys are addressed as
/// "section.key"; saving echoes a canonical form that re-parses to an
/// identical config.
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void save(const std::string& path) const;
  std::string to_text() const;

  const std::map<std::string, std::string>& values() const { return values_; }
  bool operator==(const Config& o) const = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace octa
