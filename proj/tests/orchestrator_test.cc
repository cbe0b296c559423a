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

#include "fairaudit/experiment.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.h"

namespace fairaudit {
namespace {

using testing::KindOf;
using testing::TempDir;

std::string TinyConfigPath() { return std::string(FAIRAUDIT_SOURCE_DIR) + "/tests/data/tiny.cfg"; }

ExperimentConfig TinyConfig() { return LoadConfig(TinyConfigPath()); }

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void Spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

Json WithoutTimestamp(Json doc) {
  doc["provenance"].erase("timestamp");
  return doc;
}

TEST(Config, DefaultsAndOverrides) {
  const ExperimentConfig d = ParseConfig(Json::object());
  EXPECT_EQ(d.seeds, (std::vector<uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(d.attacks.kinds.size(), 8u);
  EXPECT_EQ(d.attacks.shadows, 64u);
  EXPECT_EQ(d.defense.restriction.mode, RestrictionMode::kNone);
  EXPECT_FALSE(d.defense.dp_enabled);
  EXPECT_FALSE(d.defense.dp_train.has_value());

  const ExperimentConfig c = ParseConfig(Json::parse(R"({
      "target": {"train": {"epochs": 7, "batch_size": 8}},
      "defense": {"restriction": "truncate:3",
                  "dp": {"enabled": true, "noise_multiplier": 2.5, "train": {"epochs": 2}}}})"));
  EXPECT_EQ(c.defense.restriction.ToString(), "truncate:3");
  EXPECT_TRUE(c.defense.dp_enabled);
  EXPECT_EQ(c.defense.dp.noise_multiplier, 2.5);
  ASSERT_TRUE(c.defense.dp_train.has_value());
  EXPECT_EQ(c.defense.dp_train->epochs, 2);
  EXPECT_EQ(c.defense.dp_train->batch_size, 8) << "unset keys inherit the target schedule";
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {R"({"sedes": [1]})", R"({"target": {"train": {"epoch": 3}}})",
                           R"({"defense": {"dp": {"sigma": 1}}})", R"({"seeds": []})",
                           R"({"seeds": [1, 1]})", R"({"attacks": {"kinds": ["mia"]}})",
                           R"({"defense": {"restriction": "hide"}})",
                           R"({"target": {"train": {"epochs": "ten"}}})"}) {
    EXPECT_EQ(KindOf([&] { ParseConfig(Json::parse(text)); }), ErrorKind::kConfig) << text;
  }
}

TEST(Config, FileWithCommentsAndRoundTrip) {
  const ExperimentConfig c = TinyConfig();
  EXPECT_EQ(c.seeds, (std::vector<uint64_t>{1, 2}));
  EXPECT_EQ(c.target.layer_sizes, (std::vector<int>{4, 8, 2}));
  const ExperimentConfig again = ParseConfig(ConfigToJson(c));
  EXPECT_EQ(ConfigToJson(again), ConfigToJson(c));
  EXPECT_EQ(ConfigHash(again), ConfigHash(c));
  ExperimentConfig changed = c;
  changed.attacks.shadows = 5;
  EXPECT_NE(ConfigHash(changed), ConfigHash(c));
  EXPECT_EQ(KindOf([] { LoadConfig("/nonexistent/x.cfg"); }), ErrorKind::kIo);
  TempDir dir("cfg");
  Spit(dir.file("bad.cfg"), "{ \"seeds\": [1, }");
  EXPECT_EQ(KindOf([&] { LoadConfig(dir.file("bad.cfg")); }), ErrorKind::kConfig);
}

TEST(Config, ShippedDefaultParses) {
  const ExperimentConfig c = LoadConfig(std::string(FAIRAUDIT_SOURCE_DIR) + "/configs/default.cfg");
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_EQ(c.attacks.kinds.size(), 8u);
  EXPECT_EQ(c.attacks.shadows, 64u);
}

class TinyExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    report_ = new AuditReport(RunExperiment(TinyConfig()));
  }
  static void TearDownTestSuite() {
    delete report_;
    report_ = nullptr;
  }
  static AuditReport* report_;
};

AuditReport* TinyExperiment::report_ = nullptr;

TEST_F(TinyExperiment, TwelveEntriesPerSeed) {
  ASSERT_EQ(report_->seeds.size(), 2u);
  for (const SeedRun& s : report_->seeds) {
    ASSERT_TRUE(s.completed()) << s.failure->message;
    ASSERT_EQ(s.attacks.size(), 12u);
    std::size_t pair = 0;
    for (const AttackEntry& a : s.attacks) {
      EXPECT_EQ(a.status, "ok");
      EXPECT_EQ(a.target == "pair", a.kind.rfind("fd_", 0) == 0);
      pair += a.target == "pair" ? 1 : 0;
      EXPECT_TRUE(a.auc_a >= 0.0 && a.auc_a <= 1.0);
      EXPECT_EQ(a.n_eval, a.result.scores.size());
    }
    EXPECT_EQ(pair, 4u);
    EXPECT_TRUE(s.biased.has_value() && s.fair.has_value());
    EXPECT_FALSE(s.epsilon.has_value());
    // Prediction log covers both models on every evaluation row.
    EXPECT_EQ(s.prediction_log.size() % 2, 0u);
    EXPECT_GT(s.prediction_log.size(), 0u);
  }
  const Json doc = ReportToJson(*report_);
  EXPECT_EQ(doc["median"]["completed_seeds"], 2);
  EXPECT_FALSE(doc["median"]["partial"].get<bool>());
  EXPECT_EQ(doc["median"]["attacks"].size(), 12u);
  EXPECT_TRUE(doc["acceptance_grade"].get<bool>());
}

TEST_F(TinyExperiment, TprAtLowFprOnlyWithEnoughNegatives) {
  for (const AttackEntry& a : report_->seeds[0].attacks) {
    const std::size_t negatives = internal::ClassCounts(a.result.truth).second;
    EXPECT_EQ(a.tpr_at_1pct.has_value(), negatives >= 1000) << a.kind;
    EXPECT_FALSE(a.tpr_at_0_1pct.has_value()) << a.kind;
  }
}

TEST_F(TinyExperiment, DeterministicAndSeedIsolated) {
  const AuditReport again = RunExperiment(TinyConfig());
  EXPECT_EQ(WithoutTimestamp(ReportToJson(again)), WithoutTimestamp(ReportToJson(*report_)));
  ExperimentConfig only_two = TinyConfig();
  only_two.seeds = {2};
  const AuditReport alone = RunExperiment(only_two);
  EXPECT_EQ(ReportToJson(alone)["seeds"][0], ReportToJson(*report_)["seeds"][1]);
  EXPECT_EQ(alone.seeds[0].attacks[3].result.scores, report_->seeds[1].attacks[3].result.scores);
  EXPECT_EQ(alone.seeds[0].stage_seeds, report_->seeds[1].stage_seeds);
}

TEST_F(TinyExperiment, ArtifactsRoundTrip) {
  TempDir a("artifacts-a"), b("artifacts-b");
  SaveArtifacts(a.path(), *report_);
  namespace fs = std::filesystem;
  EXPECT_TRUE(fs::exists(a.file("models/seed-1/biased.model")));
  EXPECT_TRUE(fs::exists(a.file("models/seed-2/fair.model")));
  EXPECT_TRUE(fs::exists(a.file("logs/seed-1.json")));
  const AuditReport loaded = LoadArtifacts(a.path());
  EXPECT_EQ(ReportToJson(loaded), ReportToJson(*report_));
  EXPECT_EQ(*loaded.seeds[0].biased_model, *report_->seeds[0].biased_model);
  EXPECT_EQ(loaded.seeds[1].prediction_log, report_->seeds[1].prediction_log);
  SaveArtifacts(b.path(), loaded);
  for (const char* f : {"logs/run.json", "logs/seed-1.json", "logs/seed-2.json",
                        "models/seed-1/biased.model", "models/seed-2/fair.model"}) {
    EXPECT_EQ(Slurp(a.file(f)), Slurp(b.file(f))) << f;
  }
}

TEST_F(TinyExperiment, TamperedOrFutureLogsAreRefused) {
  TempDir dir("tamper");
  SaveArtifacts(dir.path(), *report_);
  const std::string log = dir.file("logs/seed-1.json");
  const std::string original = Slurp(log);

  std::string tampered = original;
  const std::size_t pos = tampered.find("\"scores\":[0.");
  ASSERT_NE(pos, std::string::npos);
  tampered[pos + 12] = tampered[pos + 12] == '1' ? '2' : '1';
  Spit(log, tampered);
  EXPECT_EQ(KindOf([&] { LoadArtifacts(dir.path()); }), ErrorKind::kIntegrity);

  Spit(log, original.substr(0, original.size() / 2));
  EXPECT_EQ(KindOf([&] { LoadArtifacts(dir.path()); }), ErrorKind::kIntegrity);

  std::string future = original;
  const std::size_t v = future.find("\"format_version\":1,\"payload\"");
  ASSERT_NE(v, std::string::npos);
  future[v + 17] = '9';
  Spit(log, future);
  EXPECT_EQ(KindOf([&] { LoadArtifacts(dir.path()); }), ErrorKind::kCompatibility);

  Spit(log, original);
  EXPECT_NO_THROW(LoadArtifacts(dir.path()));

  Json doc = ReportToJson(*report_);
  doc["format_version"] = 2;
  EXPECT_EQ(KindOf([&] { ReportFromJson(doc); }), ErrorKind::kCompatibility);
}

TEST_F(TinyExperiment, CsvTables) {
  TempDir dir("tables");
  EmitReport(*report_, dir.path(), {"json", "csv"});
  auto lines = [&](const std::string& f) {
    std::ifstream in(dir.file(f));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
  };
  const auto attacks = lines("tables/attacks.csv");
  EXPECT_EQ(attacks.size(), 1u + 2u * 12u);
  EXPECT_EQ(attacks[0].rfind("seed,target,kind,status,", 0), 0u);
  EXPECT_EQ(lines("tables/targets.csv").size(), 1u + 2u * 2u);
  EXPECT_EQ(lines("tables/median.csv").size(), 1u + 12u);
  const auto roc = lines("roc/seed-1/biased_mia_score.csv");
  ASSERT_GE(roc.size(), 3u);
  EXPECT_EQ(roc[0], "threshold,fpr,tpr");
  EXPECT_EQ(Json::parse(Slurp(dir.file("report.json"))), ReportToJson(*report_));
  EXPECT_EQ(KindOf([&] { EmitReport(*report_, dir.path(), {"xml"}); }), ErrorKind::kValidation);
}

TEST(Experiment, FailingSeedsGiveAPartialReport) {
  ExperimentConfig c = TinyConfig();
  c.dataset.source = "csv";
  c.dataset.csv_path = "/nonexistent/data.csv";
  const AuditReport report = RunExperiment(c);
  ASSERT_EQ(report.seeds.size(), 2u);
  for (const SeedRun& s : report.seeds) {
    ASSERT_FALSE(s.completed());
    EXPECT_EQ(s.failure->stage, "data");
    EXPECT_EQ(s.failure->kind, ErrorKindName(ErrorKind::kIo));
  }
  const Json doc = ReportToJson(report);
  EXPECT_EQ(doc["median"]["completed_seeds"], 0);
  EXPECT_TRUE(doc["median"]["partial"].get<bool>());
  EXPECT_TRUE(doc["median"]["targets"].is_null());
  EXPECT_EQ(doc["seeds"][0]["status"], "failed");
  TempDir dir("partial");
  EXPECT_NO_THROW(EmitReport(report, dir.path(), {"json", "csv"}));
}

TEST(Experiment, DpAndRestrictionVariants) {
  ExperimentConfig c = TinyConfig();
  c.seeds = {3};
  c.defense.dp_enabled = true;
  c.defense.restriction = RestrictionPolicy::Parse("fair_isolation");
  const AuditReport report = RunExperiment(c);
  const SeedRun& s = report.seeds[0];
  ASSERT_TRUE(s.completed()) << s.failure->message;
  ASSERT_TRUE(s.epsilon.has_value());
  EXPECT_GT(*s.epsilon, 0.0);
  EXPECT_TRUE(std::isfinite(*s.epsilon));
  std::size_t restricted = 0;
  for (const AttackEntry& a : s.attacks) {
    const bool expect_restricted = a.target != "fair";
    EXPECT_EQ(a.status, expect_restricted ? "restricted" : "ok") << a.target << " " << a.kind;
    restricted += a.status == "restricted" ? 1 : 0;
  }
  EXPECT_EQ(restricted, 8u);
  for (const Json& row : s.prediction_log) EXPECT_EQ(row["model"], "fair");
}

}  // namespace
}  // namespace fairaudit
