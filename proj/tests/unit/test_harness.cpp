#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ebayes/harness.hpp"

using namespace ebayes::harness;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndLiftedFields) {
  const auto cfg = parse("# header\nexperiment = seq-contraction\nseed = 18446744073709551615\n"
                         "replicates=3\n\n p = 40 # trailing\np_values = 10, 20,30\n");
  EXPECT_EQ(cfg.experiment, "seq-contraction");
  EXPECT_EQ(cfg.master_seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.replicates, 3);
  EXPECT_EQ(cfg.get_int("p"), 40);
  EXPECT_EQ(cfg.get_list("p_values"), (std::vector<double>{10, 20, 30}));
  EXPECT_EQ(cfg.get_double("missing", 2.5), 2.5);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse("p = 1\np = 2\n"), UsageError);
  EXPECT_THROW(parse("just words\n"), UsageError);
  EXPECT_THROW(parse("seed = -4\n"), UsageError);
  EXPECT_THROW(parse("p = abc\n").get_int("p"), UsageError);
  EXPECT_THROW(parse("x = 1\n").get_string("y"), UsageError);
  EXPECT_THROW(parse("replicates = 0\nexperiment = a\n").validate(), UsageError);
}

TEST(Run, UnknownExperimentOrKeyIsUsageError) {
  EXPECT_THROW(run(parse("experiment = nope\n")), UsageError);
  EXPECT_THROW(run(parse("experiment = test-errors\nbogus = 1\n")), UsageError);
  EXPECT_THROW(run(parse("experiment = test-errors\np = abc\n")), UsageError);
  EXPECT_THROW(run(parse("experiment = seq-contraction\np = 5\ns_star = 9\n")), UsageError);
}

TEST(Run, DeterministicAcrossWorkerCounts) {
  const auto cfg = parse("experiment = seq-contraction\nseed = 99\nreplicates = 6\np = 60\ns_star = 3\n");
  const auto a = run(cfg, 1), b = run(cfg, 4), c = run(cfg, 1);
  EXPECT_EQ(csv_text(a), csv_text(b));
  EXPECT_EQ(csv_text(a), csv_text(c));
  EXPECT_EQ(plot_csv_text(a), plot_csv_text(b));
  auto ja = nlohmann::json::parse(a.summary_json), jb = nlohmann::json::parse(b.summary_json);
  ja.erase("timing"), jb.erase("timing");
  EXPECT_EQ(ja, jb);
}

TEST(Run, DifferentSeedsDiffer) {
  const auto a = run(parse("experiment = test-errors\nseed = 1\nreplicates = 50\n"));
  const auto b = run(parse("experiment = test-errors\nseed = 2\nreplicates = 50\n"));
  EXPECT_NE(csv_text(a), csv_text(b));
}

TEST(Run, SummarySchemaAndRecordCount) {
  const auto r = run(parse("experiment = seq-contraction\nseed = 5\nreplicates = 4\np = 50\ns_star = 2\n"));
  const auto j = nlohmann::json::parse(r.summary_json);
  for (const char* key : {"experiment", "seed", "replicates", "failures", "provenance", "median_loss_ratio", "timing"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["median_loss_ratio"].is_number());
  EXPECT_EQ(j["records"], 4);
  EXPECT_EQ(j["provenance"]["config"]["p"], "50");
  std::istringstream csv(csv_text(r));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("replicate,p,s_star,lambda_hat", 0), 0u);
  int lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  EXPECT_EQ(lines, 4);
  EXPECT_EQ(exit_code(r), 0);
}

TEST(Run, LemmaSuiteHasOneRowPerCheck) {
  const auto r = run(parse("experiment = lemma-suite\nchi2_draws = 2000\nmass_draws = 2000\n"));
  const auto j = nlohmann::json::parse(r.summary_json);
  EXPECT_TRUE(j.contains("pass_counts"));
  EXPECT_EQ(j["pass_counts"]["passed"], j["pass_counts"]["total"]);
  ASSERT_TRUE(r.checks_passed.has_value());
  EXPECT_TRUE(*r.checks_passed);
  EXPECT_EQ(r.replicates.front().rows.size(), static_cast<std::size_t>(j["records"]));
}

TEST(Run, ReplicateFailureIsRecordedAndRunContinues) {
  // n = 1 makes every two-column support rank deficient.
  const auto r = run(parse("experiment = reg-contraction\nreplicates = 2\nn = 1\np = 3\ns_star = 1\ns_max = 2\n"), 2);
  EXPECT_EQ(r.failures(), 2);
  EXPECT_EQ(exit_code(r), 1);
  const auto j = nlohmann::json::parse(r.summary_json);
  EXPECT_EQ(j["failures"].size(), 2u);
  EXPECT_FALSE(j["failures"][0]["error"].get<std::string>().empty());
}

TEST(Run, WritesThreeOutputFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "ebayes_harness_test";
  std::filesystem::remove_all(dir);
  const auto r = run(parse("experiment = bridge-suite\nreplicates = 3\n"));
  write_report(r, dir);
  for (const char* f : {"bridge-suite.csv", "bridge-suite.summary.json", "bridge-suite.plotdata.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream in(dir / "bridge-suite.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), csv_text(r));
  std::filesystem::remove_all(dir);
}

TEST(Catalog, EveryExperimentDocumented) {
  const std::vector<std::string> names{"seq-contraction", "reg-contraction", "slm-bicluster", "sieve-rate",
                                       "lemma-suite",     "bridge-suite",    "test-errors"};
  ASSERT_EQ(experiment_catalog().size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(experiment_catalog()[i].name, names[i]);
    EXPECT_FALSE(experiment_catalog()[i].columns.empty());
  }
}
