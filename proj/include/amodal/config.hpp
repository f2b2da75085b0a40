#pragma once

#include <map>
#include <set>
#include <string>

namespace amodal {

/// Flat key-value experiment config: dotted keys, '=' separated, '#'
/// comments. CLI `--set key=value` overrides land on top.
class FlatConfig {
 public:
  FlatConfig() = default;

  static FlatConfig from_file(const std::string& path);
  static FlatConfig from_text(const std::string& text,
                              const std::string& hint = "<config>");

  void set(const std::string& key, const std::string& value);
  /// Parses "key=value"; throws SchemaError otherwise.
  void set_override(const std::string& key_equals_value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

  /// Throws SchemaError when a key is not in the known set (typo guard).
  void require_known(const std::set<std::string>& known) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace amodal
