#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace logsd {

/// Flat key = value run configuration. Every key has a registered default;
/// unknown keys are rejected with ConfigError. A `profile` key (bgl | hdfs |
/// custom) supplies dataset presets for keys the user did not set.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_text(const std::string& text, const std::string& origin = "<text>");

  void set(const std::string& key, const std::string& value);
  // Parses "key=value".
  void set_assignment(const std::string& assignment);
  bool is_set(const std::string& key) const { return explicit_.count(key) != 0; }

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// Resolves a path key; empty values fall back to out_dir / default_name.
  std::filesystem::path path(const std::string& key) const;

  /// Sorted key = value lines of every resolved key. Without paths the text
  /// is independent of where outputs are written.
  std::string canonical_text(bool include_paths = true) const;
  /// Fingerprint over non-path keys, so relocating outputs keeps the hash.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  static bool is_known_key(const std::string& key);
  static bool is_path_key(const std::string& key);

 private:
  void apply_profile();

  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace logsd
