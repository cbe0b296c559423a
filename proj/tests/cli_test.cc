//
// Copyright 2026 The FairAudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fairaudit/cli.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.h"

namespace fairaudit {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

const std::string kTiny = std::string(FAIRAUDIT_SOURCE_DIR) + "/tests/data/tiny.cfg";

struct CliRun {
  int code;
  std::string out, err;
};

CliRun Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(Cli({}).code, 1);
  EXPECT_EQ(Cli({"experiment"}).code, 1) << "experiment needs --config";
  EXPECT_EQ(Cli({"experiment", "--config", "/nonexistent/x.cfg"}).code, 1);
  EXPECT_EQ(Cli({"experiment", "--config", kTiny, "--bogus"}).code, 1);
  EXPECT_EQ(Cli({"frobnicate"}).code, 1);
  EXPECT_EQ(Cli({"train", "--config", kTiny}).code, 1) << "missing --data/--output";
  EXPECT_EQ(Cli({"experiment", "--config", kTiny, "--jobs", "0"}).code, 1);
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = Cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("experiment"), std::string::npos);
  EXPECT_EQ(Cli({"attack", "--help"}).code, 0);
}

class CliFlow : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_.file("data.csv");
    ASSERT_EQ(Cli({"generate", "--config", kTiny, "--output", data_}).code, 0);
    biased_ = dir_.file("biased.model");
    fair_ = dir_.file("fair.model");
    const CliRun t = Cli({"train", "--config", kTiny, "--data", data_, "--output", biased_});
    ASSERT_EQ(t.code, 0) << t.err;
    const CliRun f = Cli({"fair-train", "--config", kTiny, "--data", data_, "--output", fair_});
    ASSERT_EQ(f.code, 0) << f.err;
  }
  TempDir dir_{"cli"};
  std::string data_, biased_, fair_;
};

TEST_F(CliFlow, GenerateTrainAttack) {
  const LabeledDataset data = IngestCsv(data_);
  EXPECT_GT(data.size(), 0u);
  EXPECT_EQ(LoadModel(biased_).layer_sizes, (std::vector<int>{4, 8, 2}));
  EXPECT_NE(LoadModel(biased_), LoadModel(fair_));

  const std::string scores = dir_.file("scores.csv");
  const CliRun a = Cli({"attack", "--config", kTiny, "--target", biased_, "--kind", "mia_score",
                     "--eval", data_, "--scores", scores});
  ASSERT_EQ(a.code, 0) << a.err;
  const Json entry = Json::parse(a.out);
  EXPECT_EQ(entry["kind"], "mia_score");
  EXPECT_EQ(entry["status"], "ok");
  EXPECT_EQ(Slurp(scores).rfind("id,score,truth\n", 0), 0u);

  const CliRun fd = Cli({"attack", "--config", kTiny, "--target", biased_, "--fair", fair_, "--kind",
                      "fd_aia_black", "--eval", data_});
  ASSERT_EQ(fd.code, 0) << fd.err;
  EXPECT_EQ(Json::parse(fd.out)["target"], "pair");

  const CliRun as_fair = Cli({"attack", "--config", kTiny, "--target", fair_, "--as-fair", "--kind",
                           "mia_lira", "--eval", data_});
  ASSERT_EQ(as_fair.code, 0) << as_fair.err;
  EXPECT_EQ(Json::parse(as_fair.out)["target"], "fair");
}

TEST_F(CliFlow, AttackErrors) {
  const CliRun no_fair = Cli({"attack", "--config", kTiny, "--target", biased_, "--kind",
                           "fd_mia_score", "--eval", data_});
  EXPECT_EQ(no_fair.code, 1);
  EXPECT_NE(no_fair.err.find("--fair"), std::string::npos);
  EXPECT_EQ(Cli({"attack", "--target", biased_, "--kind", "mia", "--eval", data_}).code, 1);
  EXPECT_EQ(Cli({"attack", "--config", kTiny, "--target", biased_, "--kind", "aia_white",
                 "--eval", data_, "--restriction", "label_only"})
                .code,
            1);
  EXPECT_EQ(Cli({"attack", "--config", kTiny, "--target", biased_, "--kind", "mia_score",
                 "--eval", data_, "--restriction", "sometimes"})
                .code,
            1);
}

TEST_F(CliFlow, TamperedModelExitsThree) {
  std::string bytes = Slurp(biased_);
  bytes[bytes.size() - 3] ^= 0x01;
  std::ofstream(biased_, std::ios::binary) << bytes;
  const CliRun r = Cli({"attack", "--config", kTiny, "--target", biased_, "--kind", "mia_score",
                     "--eval", data_});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("integrity"), std::string::npos) << r.err;
}

TEST_F(CliFlow, DefendReportsEpsilon) {
  const CliRun r = Cli({"defend", "--config", kTiny, "--data", data_, "--output",
                     dir_.file("dp.model"), "--sigma", "2", "--clip", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("epsilon="), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_.file("dp.model")));
  EXPECT_EQ(Cli({"defend", "--config", kTiny, "--data", data_, "--output", dir_.file("x.model"),
                 "--sigma", "-1"})
                .code,
            1);
}

TEST(Cli, ExperimentWritesTreeAndReportReemits) {
  TempDir dir("cli-exp");
  const CliRun r = Cli({"experiment", "--config", kTiny, "--quick", "--out", dir.path()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("not acceptance-grade"), std::string::npos);
  for (const char* f : {"report.json", "tables/attacks.csv", "tables/targets.csv",
                        "tables/median.csv", "logs/run.json", "logs/seed-1.json",
                        "models/seed-1/biased.model", "models/seed-1/fair.model"}) {
    EXPECT_TRUE(fs::exists(dir.file(f))) << f;
  }
  const Json doc = Json::parse(Slurp(dir.file("report.json")));
  EXPECT_TRUE(doc["quick"].get<bool>());
  EXPECT_FALSE(doc["acceptance_grade"].get<bool>());
  EXPECT_EQ(doc["seeds"].size(), 1u);

  TempDir again("cli-reemit");
  const CliRun rep = Cli({"report", "--in", dir.path(), "--out", again.path(), "--format", "json,csv"});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_EQ(Slurp(again.file("report.json")), Slurp(dir.file("report.json")));
  EXPECT_EQ(Slurp(again.file("tables/attacks.csv")), Slurp(dir.file("tables/attacks.csv")));
  EXPECT_EQ(Cli({"report", "--in", dir.path(), "--format", "pdf"}).code, 1);

  std::string log = Slurp(dir.file("logs/seed-1.json"));
  log[log.size() / 2] = log[log.size() / 2] == '1' ? '2' : '1';
  std::ofstream(dir.file("logs/seed-1.json"), std::ios::binary) << log;
  EXPECT_EQ(Cli({"report", "--in", dir.path()}).code, 3);
}

TEST(Cli, OutputDirectoryPrecedence) {
  TempDir env_dir("cli-env"), flag_dir("cli-flag");
  ASSERT_EQ(::setenv("FAIRAUDIT_OUT", env_dir.path().c_str(), 1), 0);
  EXPECT_EQ(Cli({"generate", "--config", kTiny}).code, 0);
  EXPECT_TRUE(fs::exists(env_dir.file("data.csv")));
  EXPECT_EQ(Cli({"generate", "--config", kTiny, "--out", flag_dir.path()}).code, 0);
  EXPECT_TRUE(fs::exists(flag_dir.file("data.csv")));
  ::unsetenv("FAIRAUDIT_OUT");
}

TEST(Cli, AllSeedsFailingExitsTwo) {
  TempDir dir("cli-fail");
  const std::string cfg = dir.file("bad.cfg");
  std::ofstream(cfg) << R"({"dataset": {"source": "csv", "csv": {"path": "/nonexistent.csv"}},
                           "seeds": [1]})";
  const CliRun r = Cli({"experiment", "--config", cfg, "--out", dir.file("out")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("seed 1 failed"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.file("out/report.json")));
}

}  // namespace
}  // namespace fairaudit
