#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ebayes/config.hpp"

/// Replication engine: runs an experiment's replicates on a worker pool with
/// per-replicate derived seeds and writes CSV / JSON / plot data.
namespace ebayes::harness {

using Cell = std::variant<long long, double, std::string>;
using Row = std::vector<Cell>;

struct ReplicateResult {
  int replicate = 0;
  std::vector<Row> rows;
  bool failed = false;
  std::string error;
  double wall_seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> columns;
  std::vector<ReplicateResult> replicates;
  std::string summary_json;
  std::vector<std::string> plot_columns;
  std::vector<Row> plot_rows;
  /// For suites whose summary carries pass_counts.passed/total: whether every check passed.
  std::optional<bool> checks_passed;

  int failures() const;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
  /// CSV columns (name, meaning), excluding the leading replicate index.
  std::vector<std::pair<std::string, std::string>> columns;
  /// Recognized config keys with their defaults ("" when required).
  std::vector<std::pair<std::string, std::string>> keys;
};

const std::vector<ExperimentInfo>& experiment_catalog();

/// Validates the config (UsageError) and runs every replicate; replicate r uses
/// the stream derive_seed(master_seed, r). Output is independent of `workers`.
ExperimentReport run(const ExperimentConfig& cfg, int workers = 1);

/// Per-replicate records, sorted by replicate; doubles with 17 significant digits.
std::string csv_text(const ExperimentReport& report);
std::string plot_csv_text(const ExperimentReport& report);

/// <out_dir>/<experiment>.csv, .summary.json and .plotdata.csv.
void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

/// 0 when every replicate succeeded, 1 otherwise.
int exit_code(const ExperimentReport& report);

/// Built-in configuration used by verify-all for the lemma, bridge and test suites.
ExperimentConfig default_config(const std::string& experiment);

}  // namespace ebayes::harness
