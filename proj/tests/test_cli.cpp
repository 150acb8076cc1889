#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "trajnet/csv.hpp"
#include "trajnet/sample_store.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

/// Runs the CLI with `args` (shell syntax), capturing stdout and stderr.
Result cli(const std::string& args, const std::string& env = "") {
  testutil::TempDir log("cli_log");
  const std::string cmd = env + " \"" + TRAJNET_CLI + "\" " + args + " > \"" + log.file("out") + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testutil::slurp(log.file("out"))};
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

const char* kSimConfig =
    "[simulate]\nN = 10\nn_s = 3\np_M = 3\n"
    "[model]\nn_mc = 30\n"
    "[mcmc]\nn_iter = 20\nn_burnin = 10\nthin = 2\nseed = 5\n";

/// Simulated data plus a fitted store under one temp directory.
class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_ = tmp_.write("sim.ini", kSimConfig);
    sim_ = tmp_.file("sim");
    ASSERT_EQ(cli("simulate --config " + q(cfg_) + " --out " + q(sim_)).code, 0);
  }
  testutil::TempDir tmp_{"cli"};
  std::string cfg_, sim_;
};

}  // namespace

TEST(Cli, NoSubcommandOrUnknownFlagExitsOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("fit --bogus").code, 1);
  EXPECT_EQ(cli("fit").code, 1);
}

TEST(Cli, UnknownConfigKeyIsReported) {
  testutil::TempDir tmp("cli_badkey");
  const auto cfg = tmp.write("bad.ini", "[mcmc]\nn_iter = 10\nn_itr = 5\n");
  const Result r = cli("fit --config " + q(cfg));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("mcmc.n_itr"), std::string::npos) << r.output;
}

TEST_F(CliFixture, SimulateWritesDatasetAndTruth) {
  for (const std::string f : {"longitudinal.csv", "metabolites.csv", "covariates.csv", "truth.json", "config.ini", "manifest.json"})
    EXPECT_TRUE(fs::exists(fs::path(sim_) / f)) << f;
  const auto truth = nlohmann::json::parse(testutil::slurp(sim_ + "/truth.json"));
  EXPECT_EQ(truth["partition"].size(), 10u);
}

TEST_F(CliFixture, FitIsReproducibleAndSummarizes) {
  const std::string config = sim_ + "/config.ini";
  ASSERT_EQ(cli("fit --config " + q(config)).code, 0);
  ASSERT_EQ(cli("fit --config " + q(config) + " --out " + q(sim_ + "/fit2")).code, 0);
  for (const auto& f : trajnet::store_files()) {
    EXPECT_EQ(testutil::slurp(sim_ + "/fit/" + f), testutil::slurp(sim_ + "/fit2/" + f)) << f;
  }
  for (const std::string f : {"manifest.json", "transforms.json", "snapshot.json"}) EXPECT_TRUE(fs::exists(sim_ + "/fit/" + f)) << f;
  const auto man = nlohmann::json::parse(testutil::slurp(sim_ + "/fit/manifest.json"));
  EXPECT_EQ(man["seed"], 5);
  EXPECT_EQ(man["data"].size(), 3u);

  ASSERT_EQ(cli("summarize " + q(sim_ + "/fit")).code, 0);
  for (const std::string f : {"coclustering.csv", "binder_partition.csv", "beta_intervals.csv", "summary_manifest.json"})
    EXPECT_TRUE(fs::exists(sim_ + "/fit/" + f)) << f;
  ASSERT_EQ(cli("summarize " + q(sim_ + "/fit") + " --out " + q(sim_ + "/sum2")).code, 0);
  EXPECT_EQ(testutil::slurp(sim_ + "/fit/coclustering.csv"), testutil::slurp(sim_ + "/sum2/coclustering.csv"));
  EXPECT_EQ(testutil::slurp(sim_ + "/fit/binder_partition.csv"), testutil::slurp(sim_ + "/sum2/binder_partition.csv"));
}

TEST_F(CliFixture, ChainsGetTheirOwnStores) {
  ASSERT_EQ(cli("fit --config " + q(sim_ + "/config.ini") + " --chains 2 --out " + q(sim_ + "/multi")).code, 0);
  EXPECT_TRUE(fs::exists(sim_ + "/multi/chain_0/store.json"));
  EXPECT_TRUE(fs::exists(sim_ + "/multi/chain_1/store.json"));
  EXPECT_NE(testutil::slurp(sim_ + "/multi/chain_0/scalars.csv"), testutil::slurp(sim_ + "/multi/chain_1/scalars.csv"));
}

TEST_F(CliFixture, RefitAndDifferentialNetworks) {
  const auto truth = nlohmann::json::parse(testutil::slurp(sim_ + "/truth.json"));
  std::string part = "subject_id,cluster\n";
  const auto ids = truth["subject_ids"];
  for (std::size_t i = 0; i < ids.size(); ++i)
    part += ids[i].get<std::string>() + "," + std::to_string(truth["partition"][i].get<int>()) + "\n";
  const auto pfile = tmp_.write("part.csv", part);
  const std::string config = q(sim_ + "/config.ini");
  ASSERT_EQ(cli("refit-fixed-partition --config " + config + " --partition " + q(pfile) + " --out " + q(sim_ + "/refit")).code, 0);
  ASSERT_EQ(cli("summarize " + q(sim_ + "/refit") + " --diffnet 0 1").code, 0);
  for (const std::string f : {"edge_probs_cluster0.csv", "edge_probs_cluster1.csv", "median_graph_cluster0.json",
                              "median_graph_cluster1.json", "diffnet_0_1.json", "trajectories.csv"})
    EXPECT_TRUE(fs::exists(sim_ + "/refit/" + f)) << f;
  ASSERT_EQ(cli("diffnet " + q(sim_ + "/refit") + " 0 1 --threshold 1.0 --out " + q(sim_ + "/strict")).code, 0);
  EXPECT_EQ(nlohmann::json::parse(testutil::slurp(sim_ + "/strict/diffnet_0_1.json"))["edges"].size(), 0u);

  const auto short_file = tmp_.write("short.csv", "subject_id,cluster\ns001,0\n");
  const Result bad = cli("refit-fixed-partition --config " + config + " --partition " + q(short_file) + " --out " +
                         q(sim_ + "/refit_bad"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.output.find("1 rows"), std::string::npos) << bad.output;
  EXPECT_NE(bad.output.find("10 subjects"), std::string::npos) << bad.output;
}

TEST_F(CliFixture, TruncatedStoreIsReported) {
  ASSERT_EQ(cli("fit --config " + q(sim_ + "/config.ini")).code, 0);
  fs::remove(sim_ + "/fit/graphs.jsonl");
  const Result r = cli("summarize " + q(sim_ + "/fit"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("graphs.jsonl"), std::string::npos) << r.output;
}

TEST_F(CliFixture, OutputDirectoryPrecedence) {
  const std::string env_dir = tmp_.file("from_env");
  ASSERT_EQ(cli("simulate --config " + q(cfg_), "TRAJNET_OUT=" + q(env_dir)).code, 0);
  EXPECT_TRUE(fs::exists(env_dir + "/truth.json"));
  const std::string flag_dir = tmp_.file("from_flag");
  ASSERT_EQ(cli("simulate --config " + q(cfg_) + " --out " + q(flag_dir), "TRAJNET_OUT=" + q(env_dir + "_unused")).code, 0);
  EXPECT_TRUE(fs::exists(flag_dir + "/truth.json"));
  EXPECT_FALSE(fs::exists(env_dir + "_unused"));
}
