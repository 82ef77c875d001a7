#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eiknet {

/// `key = value` lines; '#' starts a comment. Repeated keys are kept in
/// order (obstacle lists use this).
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  const std::vector<std::string>& all(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;
  /// Canonical rendering, sorted by key; used for provenance hashes.
  std::string canonical() const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

std::vector<double> parse_doubles(const std::string& text);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

}  // namespace eiknet
