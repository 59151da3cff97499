#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebayes/harness.hpp"

namespace ebayes::harness::detail {

struct PlotData {
  std::vector<std::string> columns{"series", "x", "y"};
  std::vector<Row> rows;
};

struct ExperimentDef {
  ExperimentInfo info;
  /// Parses every parameter once so malformed values surface as UsageError.
  std::function<void(const ExperimentConfig&)> check;
  std::function<std::vector<Row>(const ExperimentConfig&, int replicate, std::uint64_t seed)> replicate;
  std::function<nlohmann::json(const ExperimentConfig&, const std::vector<ReplicateResult>&, PlotData&)> summarize;
};

const std::vector<ExperimentDef>& experiment_defs();

}  // namespace ebayes::harness::detail
