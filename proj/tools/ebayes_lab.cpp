// ebayes-lab: batch driver for the simulation and verification suites.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ebayes/harness.hpp"

namespace h = ebayes::harness;

namespace {

std::string catalog_help() {
  std::ostringstream os;
  os << "\nExperiments (config keys with defaults; CSV columns after the leading 'replicate'):\n";
  for (const auto& info : h::experiment_catalog()) {
    os << "\n  " << info.name << "\n    " << info.description << "\n    keys:";
    for (const auto& [key, fallback] : info.keys) os << " " << key << "=" << (fallback.empty() ? "<required>" : fallback);
    os << "\n    columns:\n";
    for (const auto& [name, doc] : info.columns) os << "      " << name << ": " << doc << "\n";
  }
  os << "\nConfig files hold one 'key = value' per line ('#' comments); 'experiment', 'seed' and\n"
        "'replicates' are recognized in every file. Outputs: <out-dir>/<experiment>.csv,\n"
        "<experiment>.summary.json and <experiment>.plotdata.csv.\n"
        "Exit codes: 0 success, 1 replicate failures (verify-all: or a failed check), 2 usage error.\n";
  return os.str();
}

void print_outcome(const h::ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::cout << report.config.experiment << ": " << report.config.replicates << " replicates, " << report.failures()
            << " failed; wrote " << (out_dir / (report.config.experiment + ".csv")).string() << "\n";
}

bool suite_passed(const h::ExperimentReport& report) {
  return report.failures() == 0 && report.checks_passed.value_or(true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical Bayes simulation lab"};
  app.footer(catalog_help());

  std::string experiment;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::string> seed_text;
  std::optional<int> replicates;
  int workers = 1;

  app.add_option("experiment", experiment, "Experiment to run, or 'verify-all'");
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed_text, "Master seed (unsigned 64-bit), overrides the config");
  app.add_option("--replicates", replicates, "Replicate count, overrides the config");
  app.add_option("--workers", workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (experiment.empty()) throw h::UsageError("an experiment name or 'verify-all' is required (see --help)");

    if (experiment == "verify-all") {
      if (!config_path.empty()) throw h::UsageError("verify-all does not take --config");
      bool all_ok = true;
      for (const char* name : {"lemma-suite", "bridge-suite", "test-errors"}) {
        h::ExperimentConfig cfg = h::default_config(name);
        if (seed_text) cfg.master_seed = h::parse_seed(*seed_text);
        if (replicates) cfg.replicates = *replicates;
        const h::ExperimentReport report = h::run(cfg, workers);
        h::write_report(report, out_dir);
        const bool ok = suite_passed(report);
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
        print_outcome(report, out_dir);
      }
      return all_ok ? 0 : 1;
    }

    h::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = h::load_config(config_path);
      if (!cfg.experiment.empty() && cfg.experiment != experiment)
        throw h::UsageError("config names experiment '" + cfg.experiment + "' but '" + experiment + "' was requested");
    }
    cfg.experiment = experiment;
    if (seed_text) cfg.master_seed = h::parse_seed(*seed_text);
    if (replicates) cfg.replicates = *replicates;

    const h::ExperimentReport report = h::run(cfg, workers);
    h::write_report(report, out_dir);
    print_outcome(report, out_dir);
    for (const auto& rep : report.replicates)
      if (rep.failed) std::cerr << "replicate " << rep.replicate << " failed: " << rep.error << "\n";
    return h::exit_code(report);
  } catch (const h::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
}
