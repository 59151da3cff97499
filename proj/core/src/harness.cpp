#include "ebayes/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ebayes/numeric.hpp"
#include "experiments.hpp"

#ifndef EBAYES_VERSION
#define EBAYES_VERSION "unknown"
#endif

namespace ebayes::harness {

namespace {

const detail::ExperimentDef& find_def(const std::string& name) {
  for (const auto& def : detail::experiment_defs())
    if (def.info.name == name) return def;
  std::string known;
  for (const auto& def : detail::experiment_defs()) known += (known.empty() ? "" : ", ") + def.info.name;
  throw UsageError("unknown experiment '" + name + "' (known: " + known + ")");
}

void check_keys(const ExperimentConfig& cfg, const ExperimentInfo& info) {
  for (const auto& [key, value] : cfg.params) {
    const bool known = std::any_of(info.keys.begin(), info.keys.end(), [&](const auto& k) { return k.first == key; });
    if (!known) throw UsageError("config key '" + key + "' is not used by experiment " + info.name);
  }
  for (const auto& [key, fallback] : info.keys)
    if (fallback.empty() && !cfg.has(key))
      throw UsageError("config key '" + key + "' is required for experiment " + info.name);
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::string csv(const std::vector<std::string>& columns, const std::vector<const Row*>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const Row* row : rows) {
    for (std::size_t i = 0; i < row->size(); ++i) out += (i ? "," : "") + format_cell((*row)[i]);
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

}  // namespace

int ExperimentReport::failures() const {
  return static_cast<int>(std::count_if(replicates.begin(), replicates.end(), [](const auto& r) { return r.failed; }));
}

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = [] {
    std::vector<ExperimentInfo> out;
    for (const auto& def : detail::experiment_defs()) out.push_back(def.info);
    return out;
  }();
  return catalog;
}

ExperimentReport run(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  if (workers < 1) throw UsageError("workers must be >= 1");
  const detail::ExperimentDef& def = find_def(cfg.experiment);
  check_keys(cfg, def.info);

  ExperimentReport report;
  report.config = cfg;
  report.columns.push_back("replicate");
  for (const auto& [name, doc] : def.info.columns) report.columns.push_back(name);
  report.replicates.resize(cfg.replicates);

  if (def.check) def.check(cfg);

  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next.fetch_add(1); r < cfg.replicates; r = next.fetch_add(1)) {
      ReplicateResult& out = report.replicates[r];
      out.replicate = r;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        out.rows = def.replicate(cfg, r, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(r)));
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
        out.rows.clear();
      }
      out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const int n_threads = std::min(workers, cfg.replicates);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        try {
          worker();
        } catch (...) {
          errors[t] = std::current_exception();
          next.store(cfg.replicates);
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  detail::PlotData plot;
  nlohmann::json summary = def.summarize(cfg, report.replicates, plot);
  report.plot_columns = plot.columns;
  report.plot_rows = std::move(plot.rows);
  if (summary.contains("pass_counts")) {
    const auto& pc = summary["pass_counts"];
    if (pc.contains("passed") && pc.contains("total"))
      report.checks_passed = pc["passed"].get<long long>() == pc["total"].get<long long>();
  }

  for (auto& rep : report.replicates)
    for (auto& row : rep.rows) row.insert(row.begin(), Cell{static_cast<long long>(rep.replicate)});

  nlohmann::json failures = nlohmann::json::array();
  nlohmann::json per_rep = nlohmann::json::array();
  double total = 0.0;
  std::size_t records = 0;
  for (const auto& rep : report.replicates) {
    if (rep.failed) failures.push_back({{"replicate", rep.replicate}, {"error", rep.error}});
    per_rep.push_back(rep.wall_seconds);
    total += rep.wall_seconds;
    records += rep.rows.size();
  }
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : cfg.params) params[k] = v;

  nlohmann::json doc;
  doc["experiment"] = cfg.experiment;
  doc["seed"] = cfg.master_seed;
  doc["replicates"] = cfg.replicates;
  doc["records"] = records;
  for (auto& [k, v] : summary.items()) doc[k] = v;
  doc["failures"] = failures;
  doc["provenance"] = {{"config", params}, {"master_seed", cfg.master_seed}, {"library_version", EBAYES_VERSION},
                       {"seed_derivation", "replicate r uses derive_seed(master_seed, r)"}};
  doc["timing"] = {{"workers", n_threads}, {"replicate_wall_seconds", per_rep}, {"total_replicate_seconds", total}};
  report.summary_json = doc.dump(2) + "\n";
  return report;
}

std::string csv_text(const ExperimentReport& report) {
  std::vector<const Row*> rows;
  for (const auto& rep : report.replicates)
    for (const auto& row : rep.rows) rows.push_back(&row);
  return csv(report.columns, rows);
}

std::string plot_csv_text(const ExperimentReport& report) {
  std::vector<const Row*> rows;
  for (const auto& row : report.plot_rows) rows.push_back(&row);
  return csv(report.plot_columns, rows);
}

void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  const std::string& name = report.config.experiment;
  write_file(out_dir / (name + ".csv"), csv_text(report));
  write_file(out_dir / (name + ".summary.json"), report.summary_json);
  write_file(out_dir / (name + ".plotdata.csv"), plot_csv_text(report));
}

int exit_code(const ExperimentReport& report) { return report.failures() > 0 ? 1 : 0; }

ExperimentConfig default_config(const std::string& experiment) {
  const detail::ExperimentDef& def = find_def(experiment);
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.master_seed = 20240501;
  cfg.replicates = 1;
  for (const auto& [key, fallback] : def.info.keys) {
    if (fallback.empty()) throw UsageError("experiment " + experiment + " has required keys; supply a config");
  }
  if (experiment == "bridge-suite") cfg.replicates = 100;
  if (experiment == "test-errors") cfg.replicates = 10000;
  return cfg;
}

}  // namespace ebayes::harness
