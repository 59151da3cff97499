#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebayes::harness {

/// Invalid configuration or command line; the CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. `experiment`, `seed` and `replicates` are
/// lifted into fields; everything else stays in params.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t master_seed = 0;
  int replicates = 1;
  std::map<std::string, std::string> params;

  bool has(const std::string& key) const { return params.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_list(const std::string& key) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  void validate() const;
};

/// One `key = value` per line, `#` starts a comment, blank lines ignored.
/// Throws UsageError on malformed lines or duplicate keys.
ExperimentConfig parse_config(std::istream& in);
std::uint64_t parse_seed(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ebayes::harness
