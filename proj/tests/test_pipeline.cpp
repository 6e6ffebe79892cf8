#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "okra/pipeline.hpp"

using namespace okra;
using namespace okra::pipeline;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"(seed = 5
[data]
n_candidates = 20
n_vacancies = 30
n_skills = 12
labeled_per_candidate = 6
negative_per_candidate = 2
[sampler]
walks_per_anchor = 2
max_path_length = 3
[model]
text_dim = 8
node_dim = 4
hash_buckets = 64
[train]
epochs = 1
learning_rate = 0.001
)";

RunConfig parse(const std::string& text, const fs::path& base = ".") {
  std::istringstream in(text);
  return RunConfig::parse(in, base);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("okra-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.ini") << kTiny;
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(OKRA_CLI) + " " + args + " > " + (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string log() { return slurp(dir_ / "log.txt"); }
  std::string cfg() { return "--config " + (dir_ / "tiny.ini").string(); }

  fs::path dir_;
};

}  // namespace

TEST(Config, DefaultsAndDigest) {
  const auto a = parse(kTiny), b = parse(kTiny);
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_EQ(a.digest().size(), 64u);
  EXPECT_EQ(a.data.n_candidates, 20u);
  EXPECT_EQ(a.data.seed, 5u);
  EXPECT_NE(a.digest(), parse(std::string(kTiny) + "epsilon = 1e-7\n").digest());
  EXPECT_NE(a.canonical().find("train.learning_rate=0.001"), std::string::npos);
}

TEST(Config, ErrorsNameTheKey) {
  auto expect_key = [](const std::string& text, const std::string& key) {
    try {
      parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  expect_key("[data]\nn_candidatez = 3\n", "data.n_candidatez");
  expect_key("[data]\nn_candidates = -3\n", "data.n_candidates");
  expect_key("[train]\nlearning_rate = fast\n", "train.learning_rate");
  expect_key("[graph]\ninference = maybe\n", "graph.inference");
  expect_key("[bogus]\nx = 1\n", "bogus");
  EXPECT_THROW(parse("[sampler]\ntrain_ratio = 0.9\n"), ConfigError);
  EXPECT_THROW(parse("[train]\nepochs = 0\n"), ConfigError);
}

TEST(Config, OutResolvesAgainstBase) {
  const auto c = parse("out = runs/a\n", "/tmp/cfg");
  EXPECT_EQ(c.out, fs::path("/tmp/cfg/runs/a"));
  EXPECT_EQ(parse("out = /abs/x\n", "/tmp/cfg").out, fs::path("/abs/x"));
}

TEST(Stages, MissingInputAndDigest) {
  auto c = parse(kTiny);
  c.out = fs::temp_directory_path() / ("okra-stage-" + std::to_string(::getpid()));
  fs::remove_all(c.out);
  EXPECT_THROW(stage_build_kg(c), MissingInput);
  stage_generate(c);
  EXPECT_THROW(stage_train(c), MissingInput);
  auto other = c;
  other.set_seed(6);
  EXPECT_THROW(stage_build_kg(other), DigestMismatch);
  fs::remove_all(c.out);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--bogus"), 2);
  std::ofstream(dir_ / "bad.ini") << "[data]\nwhat = 1\n";
  EXPECT_EQ(run("generate --config " + (dir_ / "bad.ini").string()), 2);
  EXPECT_NE(log().find("data.what"), std::string::npos);
  const std::string out = " --out " + (dir_ / "run").string();
  EXPECT_EQ(run("pipeline --stage evaluate " + cfg() + out), 3);
  EXPECT_EQ(run("generate " + cfg() + out), 0);
  EXPECT_EQ(run("pipeline --stage evaluate " + cfg() + out), 3);
  EXPECT_EQ(run("pipeline --stage build-kg --seed 99 " + cfg() + out), 4);
  EXPECT_EQ(run("pipeline --stage baseline " + cfg() + out), 2);
}

TEST_F(Cli, FullRunIsReproducible) {
  auto full = [&](const std::string& name) {
    const std::string out = " --out " + (dir_ / name).string();
    EXPECT_EQ(run("generate " + cfg() + out), 0) << log();
    EXPECT_EQ(run("pipeline --stage all " + cfg() + out), 0) << log();
  };
  full("a");
  full("b");
  for (const char* f :
       {"candidates.tsv", "vacancies.tsv", "labels.tsv", "manifest.json", "triples.tsv", "subgraphs.jsonl",
        "splits.json", "checkpoint.bin", "history.csv", "report.json", "plotdata.csv", "explanations.jsonl",
        "baselines/gtrans2/report.json", "baselines/tfidf/report.json"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    if (std::string(f) != "history.csv" && std::string(f) != "manifest.json") {
      EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
  }
  const auto report = nlohmann::json::parse(slurp(dir_ / "a" / "report.json"));
  EXPECT_EQ(report.at("config_digest"), parse(kTiny).digest());
  std::ifstream ex(dir_ / "a" / "explanations.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(ex, line)) {
    EXPECT_EQ(nlohmann::json::parse(line).at("channels").size(), 4u);
    ++n;
  }
  const auto splits = nlohmann::json::parse(slurp(dir_ / "a" / "splits.json"));
  EXPECT_GT(n, 0u);
  EXPECT_FALSE(splits.at("test").empty());
}
