#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "dealerpred/cli/commands.hpp"
#include "dealerpred/cli/config.hpp"

using namespace dealerpred;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"(
[market]
days = 40
bonds = 12
periodic_dealers = 4
sparse_dealers = 3
dense_dealers = 3
dense_breadth = 6

[filter]
top_dealers = 10
top_bonds = 12

[window]
t_in = 3
t_out = 2
stride = 2

[split]
train_fraction = 0.75

[model]
kind = trans_pprz
d_model = 8
heads = 2
n_layers = 1
d_ff = 16
hidden = 8

[train]
epochs = 2
batch_size = 8
learning_rate = 0.01

[cluster]
clusters = 3
)";

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("dealerpred_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "run.ini") const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  // Runs the CLI binary; returns its exit code and captures stderr.
  int run(const std::string& args, std::string* err = nullptr) const {
    const fs::path log = dir_ / "stderr.txt";
    const std::string cmd = std::string(DEALERPRED_CLI_PATH) + " " + args + " 2>" + log.string();
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  std::istringstream in("");
  const cli::RunConfig c = cli::parse_config(in);
  const cli::RunConfig d;
  EXPECT_EQ(c.t_in, d.t_in);
  EXPECT_EQ(c.t_out, d.t_out);
  EXPECT_EQ(c.market.days, 249u);
  EXPECT_EQ(c.clusters, 4u);
  EXPECT_EQ(c.model.kind, models::ModelKind::TransPPRZ);
  EXPECT_EQ(c.granularity, harness::Granularity::Cluster);
}

TEST(Config, AcceptsColonAndEqualsSeparators) {
  std::istringstream in("[window]\nt_in: 7\nt_out = 3 ; trailing comment\n# comment\n");
  const cli::RunConfig c = cli::parse_config(in);
  EXPECT_EQ(c.t_in, 7u);
  EXPECT_EQ(c.t_out, 3u);
}

TEST(Config, KeysOutsideSectionsAreAccepted) {
  std::istringstream in("t_in: 7\nepochs = 3\n");
  const cli::RunConfig c = cli::parse_config(in);
  EXPECT_EQ(c.t_in, 7u);
  EXPECT_EQ(c.train.epochs, 3u);
}

TEST(Config, UnknownKeyIsNamedInError) {
  std::istringstream in("[window]\nt_inn = 7\n");
  try {
    cli::parse_config(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t_inn"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsBadValues) {
  for (const char* text : {"[window]\nt_in = -1\n", "[window]\nt_in = abc\n", "[split]\ntrain_fraction = 1.5\n",
                           "[model]\nkind = rnn\n", "[run]\ngranularity = weekly\n", "[model]\nd_model = 10\nheads = 4\n",
                           "[window]\nstride = 0\n", "[market]\nt_in = 3\n", "[windows]\nt_in = 3\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(cli::parse_config(in), ConfigError) << text;
  }
}

TEST(Config, ResolvedConfigRoundTrips) {
  std::istringstream in(kTinyConfig);
  const cli::RunConfig c = cli::parse_config(in);
  std::ostringstream first;
  cli::write_resolved_config(first, c);
  std::istringstream again(first.str());
  std::ostringstream second;
  cli::write_resolved_config(second, cli::parse_config(again));
  EXPECT_EQ(first.str(), second.str());
  EXPECT_NE(first.str().find("t_in = 3"), std::string::npos);
}

TEST(Config, SeedsAreDerivedPerStage) {
  cli::RunConfig c;
  c.seed = 7;
  EXPECT_NE(c.market_seed(), c.model_seed());
  EXPECT_NE(c.model_seed(), c.cluster_seed());
  EXPECT_EQ(c.resolved_model(5).seed, c.model_seed());
  EXPECT_EQ(c.resolved_model(5).vocab, 5u);
  EXPECT_EQ(c.resolved_market().seed, c.market_seed());
}

TEST_F(Workspace, GenIsByteIdenticalForSameSeed) {
  const auto cfg = write_config(kTinyConfig);
  ASSERT_EQ(run("gen --config " + cfg.string() + " --seed 7 --output-dir " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("gen --config " + cfg.string() + " --seed 7 --output-dir " + (dir_ / "b").string()), 0);
  ASSERT_EQ(run("gen --config " + cfg.string() + " --seed 8 --output-dir " + (dir_ / "c").string()), 0);
  for (const char* f : {"records.csv", "vocab.csv", "histories.otcf"}) {
    const auto a = slurp(dir_ / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "a" / "records.csv"), slurp(dir_ / "c" / "records.csv"));
}

TEST_F(Workspace, EvalBeforeTrainNamesMissingCheckpoint) {
  const auto cfg = write_config(kTinyConfig);
  const std::string out = " --output-dir " + (dir_ / "run").string();
  ASSERT_EQ(run("gen --config " + cfg.string() + out), 0);
  std::string err;
  EXPECT_EQ(run("eval --config " + cfg.string() + out, &err), cli::kMissingArtifact);
  EXPECT_NE(err.find("checkpoint"), std::string::npos) << err;
}

TEST_F(Workspace, TrainWithoutHistoriesIsMissingArtifact) {
  const auto cfg = write_config(kTinyConfig);
  std::string err;
  EXPECT_EQ(run("train --config " + cfg.string() + " --output-dir " + (dir_ / "run").string(), &err),
            cli::kMissingArtifact);
  EXPECT_NE(err.find("histories.otcf"), std::string::npos) << err;
}

TEST_F(Workspace, UnknownConfigKeyExitsWithUsageError) {
  const auto cfg = write_config("[window]\nt_inn = 7\n");
  std::string err;
  EXPECT_EQ(run("gen --config " + cfg.string() + " --output-dir " + (dir_ / "run").string(), &err), cli::kUsageError);
  EXPECT_NE(err.find("t_inn"), std::string::npos) << err;
}

TEST_F(Workspace, FullPipelineProducesReports) {
  const auto cfg = write_config(kTinyConfig);
  const std::string out = " --config " + cfg.string() + " --output-dir " + (dir_ / "run").string();
  for (const char* cmd : {"gen", "cluster", "train", "eval", "stats"}) ASSERT_EQ(run(cmd + out), 0) << cmd;
  const fs::path run_dir = dir_ / "run";
  EXPECT_TRUE(fs::exists(run_dir / "config.resolved"));
  EXPECT_TRUE(fs::exists(run_dir / "checkpoints" / "index.csv"));

  std::istringstream report(slurp(run_dir / "report.csv"));
  std::string line;
  std::getline(report, line);
  EXPECT_EQ(line, "model,granularity,cluster,tp,fp,fn,precision,recall,f1");
  std::size_t rows = 0;
  while (std::getline(report, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  EXPECT_EQ(rows, 3u);

  const std::string stats = slurp(run_dir / "stats.csv");
  EXPECT_EQ(stats.rfind("model,layer,mean,variance\n", 0), 0u);
  EXPECT_NE(stats.find("# checkpoint cluster_"), std::string::npos);
  EXPECT_NE(stats.find("TransPPRZ,decoder.layer0,"), std::string::npos);
}

TEST_F(Workspace, StatsRejectsNonTransformerCheckpoint) {
  std::string text = kTinyConfig;
  text.replace(text.find("trans_pprz"), 10, "lstm");
  const auto cfg = write_config(text);
  const std::string out = " --config " + cfg.string() + " --output-dir " + (dir_ / "run").string();
  for (const char* cmd : {"gen", "cluster", "train"}) ASSERT_EQ(run(cmd + out), 0) << cmd;
  EXPECT_EQ(run("stats" + out), cli::kUsageError);
}

TEST_F(Workspace, CompareGridHasEveryModelAndCluster) {
  const auto cfg = write_config(kTinyConfig);
  const std::string out = " --config " + cfg.string() + " --output-dir " + (dir_ / "run").string();
  for (const char* cmd : {"gen", "cluster", "compare"}) ASSERT_EQ(run(cmd + out), 0) << cmd;
  std::istringstream grid(slurp(dir_ / "run" / "compare.csv"));
  std::string line;
  std::getline(grid, line);
  EXPECT_EQ(line, "model,cluster0,cluster1,cluster2,avg");
  std::vector<std::string> names;
  while (std::getline(grid, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
    names.push_back(line.substr(0, line.find(',')));
  }
  ASSERT_EQ(names.size(), models::kAllModelKinds.size());
  for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(names[i], models::to_string(models::kAllModelKinds[i]));
}

TEST_F(Workspace, CompareIsIndependentOfThreadCount) {
  const auto cfg = write_config(kTinyConfig);
  const std::string out = " --config " + cfg.string() + " --output-dir " + (dir_ / "run").string();
  ASSERT_EQ(run("gen" + out), 0);
  ASSERT_EQ(run("cluster" + out), 0);
  ASSERT_EQ(run("compare --threads 1" + out), 0);
  const auto serial = slurp(dir_ / "run" / "compare.csv");
  const auto serial_report = slurp(dir_ / "run" / "compare_report.csv");
  ASSERT_EQ(run("compare --threads 3" + out), 0);
  EXPECT_EQ(serial, slurp(dir_ / "run" / "compare.csv"));
  EXPECT_EQ(serial_report, slurp(dir_ / "run" / "compare_report.csv"));
}

TEST(Commands, RunCommandMapsErrorsToExitCodes) {
  std::ostringstream log;
  cli::CommandOptions options;
  options.log = &log;
  cli::RunConfig config;
  config.output_dir = (fs::temp_directory_path() / "dealerpred_cli_missing").string();
  fs::remove_all(config.output_dir);
  EXPECT_EQ(cli::run_command("cluster", config, options), cli::kMissingArtifact);
  EXPECT_EQ(cli::run_command("frobnicate", config, options), cli::kUsageError);
  EXPECT_NE(log.str().find("frobnicate"), std::string::npos);
  fs::remove_all(config.output_dir);
}
