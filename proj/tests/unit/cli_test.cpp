// Copyright 2026 The erasehash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "erasehash/dataset.hpp"
#include "erasehash/hash_layer.hpp"
#include "erasehash/serialize.hpp"
#include "erasehash/trainer.hpp"
#include "json.hpp"

namespace erasehash {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("erasehash_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& rel) const { return (root_ / rel).string(); }

  // Small dataset plus a short training run; returns the train directory.
  std::string prepare() {
    EXPECT_EQ(run({"generate-data", "--out", path("data"), "--seed", "3", "--classes", "3",
                   "--per-class", "6", "--height", "16", "--width", "16", "--motif-size", "5"})
                  .code,
              0);
    const Result r = run(tiny_train(path("train")));
    EXPECT_EQ(r.code, 0) << r.err;
    return path("train");
  }

  std::vector<std::string> tiny_train(const std::string& out) const {
    return {"train", "--data", path("data/dataset.fghd"), "--out", out, "--k", "8", "--r", "6",
            "--iterations", "2", "--epochs-per-iteration", "1", "--batch-size", "3",
            "--lr-milestones", "", "--n-e", "2", "--l", "3", "--channels", "4,8"};
  }

  fs::path root_;
};

TEST_F(CliTest, UnknownVerbIsAUsageError) {
  const Result r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("usage:"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, 1);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  run({"generate-data", "--out", path("data"), "--classes", "3", "--per-class", "6",
       "--height", "16", "--width", "16", "--motif-size", "5"});
  const Result r = run({"train", "--data", path("data/dataset.fghd"), "--out", path("t"),
                        "--k", "-3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("\"k\""), std::string::npos);
  EXPECT_EQ(run({"eval", "--data", path("missing.fghd"), "--checkpoint", path("x"), "--db",
                 path("y"), "--out", path("e")})
                .code,
            2);
}

TEST_F(CliTest, PipelineProducesReadableArtifacts) {
  const std::string train = prepare();
  for (const char* f : {"config.json", "checkpoint.fghk", "database.fghv", "train_log.csv",
                        "manifest.json"})
    EXPECT_TRUE(fs::exists(fs::path(train) / f)) << f;
  EXPECT_NO_THROW(load_checkpoint(fs::path(train) / "checkpoint.fghk"));
  EXPECT_NO_THROW(load_hash_database(fs::path(train) / "database.fghv"));

  const auto manifest = nlohmann::json::parse(slurp(fs::path(train) / "manifest.json"));
  for (const char* key : {"config_hash", "seed", "artifact_paths", "started_at", "finished_at"})
    EXPECT_TRUE(manifest.contains(key)) << key;

  const Result eval = run({"eval", "--data", path("data/dataset.fghd"), "--checkpoint",
                           train + "/checkpoint.fghk", "--db", train + "/database.fghv",
                           "--out", path("eval")});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto summary = nlohmann::json::parse(slurp(path("eval/summary.json")));
  ASSERT_TRUE(summary.contains("map"));
  EXPECT_GE(summary["map"].get<double>(), 0.0);
  EXPECT_LE(summary["map"].get<double>(), 1.0);

  const Result db = run({"build-db", "--data", path("data/dataset.fghd"), "--checkpoint",
                         train + "/checkpoint.fghk", "--out", path("db")});
  ASSERT_EQ(db.code, 0) << db.err;
  const HashDatabase built = load_hash_database(path("db/database.fghv"));
  const Dataset data = load_dataset(path("data/dataset.fghd"));
  EXPECT_EQ(built.codes.size(), data.database_ids().size());

  const Result q = run({"query", "--data", path("data/dataset.fghd"), "--checkpoint",
                        train + "/checkpoint.fghk", "--db", train + "/database.fghv", "--id",
                        std::to_string(data.query_ids()[0]), "--top", "4", "--out",
                        path("query")});
  ASSERT_EQ(q.code, 0) << q.err;
  const std::string neighbors = slurp(path("query/neighbors.csv"));
  EXPECT_EQ(std::count(neighbors.begin(), neighbors.end(), '\n'), 5);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  prepare();
  ASSERT_EQ(run(tiny_train(path("again"))).code, 0);
  EXPECT_EQ(slurp(path("train/database.fghv")), slurp(path("again/database.fghv")));
  EXPECT_EQ(slurp(path("train/checkpoint.fghk")), slurp(path("again/checkpoint.fghk")));
  EXPECT_EQ(slurp(path("train/train_log.csv")), slurp(path("again/train_log.csv")));
}

TEST_F(CliTest, AblateWritesTheGrid) {
  prepare();
  std::vector<std::string> args{"ablate", "--data", path("data/dataset.fghd"), "--out",
                                path("ablate"), "--grid", "n_e=1,2", "l=1,2,3"};
  const auto train = tiny_train("");
  for (std::size_t i = 5; i < train.size(); ++i) args.push_back(train[i]);
  const Result r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("ablate/ablation.csv")));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "n_e\\l,1,2,3");
  for (std::size_t i = 1; i < 3; ++i) EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 3);
  EXPECT_EQ(run({"ablate", "--data", path("data/dataset.fghd"), "--out", path("bad"), "--grid",
                 "k=1,2", "l=1"})
                .code,
            2);
}

}  // namespace
}  // namespace erasehash
