#include "ebayes/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ebayes::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw UsageError("config key '" + key + "': trailing characters in '" + text + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError("config key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

}  // namespace

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError("seed: expected an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw UsageError("config key '" + key + "' is required for experiment " + experiment);
  return it->second;
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double ExperimentConfig::get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long ExperimentConfig::get_int(const std::string& key) const { return parse_int(key, get_string(key)); }

long long ExperimentConfig::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> ExperimentConfig::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get_string(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw UsageError("config key '" + key + "': empty list");
  return out;
}

std::vector<double> ExperimentConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? get_list(key) : fallback;
}

void ExperimentConfig::validate() const {
  if (experiment.empty()) throw UsageError("config: 'experiment' is required");
  if (replicates < 1) throw UsageError("config: replicates must be >= 1");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    if (!raw.emplace(key, value).second) throw UsageError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  for (auto& [key, value] : raw) {
    if (key == "experiment") {
      cfg.experiment = value;
    } else if (key == "seed") {
      cfg.master_seed = parse_seed(value);
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(parse_int(key, value));
    } else {
      cfg.params.emplace(key, value);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace ebayes::harness
