#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ietagc {

/// Flat key-value configuration with dotted section keys (`iet.k = 10`).
/// Later merges override earlier ones; the intended precedence is
/// file < environment (IETAGC_ prefix, `.` spelled `__`) < command-line flags.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);

  void merge_file(const std::string& path);
  void merge_env(const std::string& prefix = "IETAGC_");
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& def) const;
  int get_int(const std::string& key, int def) const;
  std::int64_t get_int64(const std::string& key, std::int64_t def) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
  /// Comma-separated list of reals.
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& def) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Rejects keys outside the known set (typo guard); error names the key.
  void check_known(const std::set<std::string>& known) const;

  /// Environment variable name for a config key (IETAGC_IET__K for iet.k).
  static std::string env_name(const std::string& key,
                              const std::string& prefix = "IETAGC_");

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ietagc
