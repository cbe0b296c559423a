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

// End-to-end audit pipeline: data, biased and fair targets, shadows, the
// attack matrix, defenses, seed medians, artifacts and reports.

#ifndef FAIRAUDIT_EXPERIMENT_H_
#define FAIRAUDIT_EXPERIMENT_H_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "fairaudit/attacks.h"
#include "fairaudit/config.h"
#include "fairaudit/dataset.h"
#include "fairaudit/defenses.h"
#include "fairaudit/error.h"
#include "fairaudit/evalmetrics.h"
#include "fairaudit/fairness.h"
#include "fairaudit/model_io.h"
#include "fairaudit/recipe.h"

namespace fairaudit {

inline constexpr int kReportFormatVersion = 1;
inline constexpr int kLogFormatVersion = 1;

// TPR at an FPR is reported only with at least 10 / fpr negatives.
inline constexpr double kReportFprs[] = {0.01, 0.001};

struct AttackEntry {
  std::string kind;
  std::string target;             // biased | fair | pair
  std::string status = "ok";      // ok | restricted
  std::string message;
  double acc_a = std::nan("");
  double auc_a = std::nan("");
  std::optional<double> tpr_at_1pct;
  std::optional<double> tpr_at_0_1pct;
  std::optional<double> raw_auc;  // naive score attack only
  std::size_t feature_width = 0;
  std::size_t n_eval = 0;
  AttackResult result;            // per-example scores; persisted in logs
};

struct SeedFailure {
  std::string stage;
  std::string kind;
  std::string message;
};

struct SeedRun {
  uint64_t seed = 0;
  std::map<std::string, uint64_t> stage_seeds;
  std::optional<SeedFailure> failure;
  std::optional<FairnessReport> biased;
  std::optional<FairnessReport> fair;
  std::vector<AttackEntry> attacks;
  std::optional<double> epsilon;  // DP only; +inf when noise is disabled
  // Artifacts
  std::optional<MlpModel> biased_model;
  std::optional<MlpModel> fair_model;
  Json prediction_log = Json::array();

  bool completed() const { return !failure.has_value(); }
};

struct AuditReport {
  ExperimentConfig config;
  std::string config_hash;
  std::string timestamp;
  std::vector<SeedRun> seeds;
};

inline void ComputeAttackMetrics(AttackEntry& entry) {
  const auto& r = entry.result;
  entry.n_eval = r.scores.size();
  entry.feature_width = r.feature_width;
  entry.acc_a = AccuracyAtThreshold(r.scores, r.truth);
  entry.auc_a = Auc(r.scores, r.truth);
  const std::size_t negatives = internal::ClassCounts(r.truth).second;
  std::optional<double>* slots[] = {&entry.tpr_at_1pct, &entry.tpr_at_0_1pct};
  for (std::size_t i = 0; i < 2; ++i) {
    *slots[i] = std::nullopt;
    if (static_cast<double>(negatives) >= 10.0 / kReportFprs[i] - 1e-9) {
      *slots[i] = TprAtFpr(r.scores, r.truth, kReportFprs[i]);
    }
  }
  entry.raw_auc = std::isnan(r.raw_auc) ? std::nullopt : std::optional<double>(r.raw_auc);
}

namespace internal {

inline const char* kStages[] = {"data", "split", "target-init", "target-train", "shadows", "attacks"};

inline Json Num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline Json Num(const std::optional<double>& v) { return v ? Num(*v) : Json(nullptr); }

inline Json PredictionLog(const LabeledDataset& eval, const ForwardRecord& record,
                          const std::string& tag) {
  Json out = Json::array();
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Json entry = {{"id", eval.ids[i]},
                  {"model", tag},
                  {"probs", {record.probs(r, 0), record.probs(r, 1)}}};
    if (record.embedding.rows() == record.probs.rows() && record.embedding.cols() > 0) {
      std::vector<double> e(record.embedding.row(r).data(),
                            record.embedding.row(r).data() + record.embedding.cols());
      entry["embedding"] = e;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

inline LabeledDataset LoadData(const ExperimentConfig& config, uint64_t data_seed) {
  if (config.dataset.source == "synthetic") {
    SyntheticSpec spec = config.dataset.synthetic;
    spec.seed = data_seed;
    return GenerateSynthetic(spec);
  }
  LabeledDataset data = IngestCsv(config.dataset.csv_path, config.dataset.csv);
  if (config.dataset.csv_skew_ratio) {
    data = ApplySkew(data, *config.dataset.csv_skew_ratio, 0, DeriveSeed(data_seed, "skew"));
  }
  return data;
}

}  // namespace internal

// Asserts that no evaluation row was used to train any shadow.
inline void CheckNoLeakage(const Splits& splits, const ShadowSet& shadows) {
  std::unordered_set<uint64_t> eval_ids(splits.members.ids.begin(), splits.members.ids.end());
  eval_ids.insert(splits.nonmembers.ids.begin(), splits.nonmembers.ids.end());
  for (const auto& entry : shadows.members) {
    for (std::size_t r : entry.subset) {
      Require(eval_ids.count(splits.shadow_pool.ids[r]) == 0, ErrorKind::kValidation,
              "data leakage: evaluation row in a shadow subset");
    }
  }
}

inline SeedRun RunSeed(const ExperimentConfig& config, uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  for (const char* stage : internal::kStages) run.stage_seeds[stage] = DeriveSeed(seed, stage);
  std::string stage = "data";
  try {
    const LabeledDataset data = internal::LoadData(config, run.stage_seeds["data"]);
    stage = "split";
    SplitSpec split = config.dataset.split;
    split.seed = run.stage_seeds["split"];
    const Splits splits = MakeSplits(data, split);

    stage = "targets";
    TrainingRecipe recipe = config.target;
    if (config.defense.dp_enabled) {
      recipe.dp = config.defense.dp;
      if (config.defense.dp_train) recipe.train = *config.defense.dp_train;
    }
    const uint64_t init_seed = run.stage_seeds["target-init"];
    const uint64_t train_seed = run.stage_seeds["target-train"];
    const TrainedModel biased = TrainBiasedModel(recipe, splits.members, init_seed, train_seed);
    const TrainedModel fair = TrainFairModel(recipe, splits.members, init_seed, train_seed);
    if (recipe.dp) run.epsilon = std::max(biased.epsilon, fair.epsilon);
    run.biased_model = biased.model;
    run.fair_model = fair.model;

    stage = "fairness";
    run.biased = EvaluateFairness(biased.model, splits.nonmembers);
    run.fair = EvaluateFairness(fair.model, splits.nonmembers);

    const LabeledDataset eval = Concatenate(splits.members, splits.nonmembers);
    const RestrictionPolicy& policy = config.defense.restriction;
    const bool isolated = policy.mode == RestrictionMode::kFairIsolation;
    if (!isolated) {
      run.prediction_log = internal::PredictionLog(
          eval, RestrictPredictions(Forward(biased.model, eval.features), policy), "biased");
    }
    const Json fair_log = internal::PredictionLog(
        eval, isolated ? Forward(fair.model, eval.features)
                       : RestrictPredictions(Forward(fair.model, eval.features), policy),
        "fair");
    run.prediction_log.insert(run.prediction_log.end(), fair_log.begin(), fair_log.end());

    stage = "shadows";
    std::optional<ShadowSet> shadows;
    const bool any_mia = std::any_of(config.attacks.kinds.begin(), config.attacks.kinds.end(),
                                     [](const AttackSpec& s) { return s.is_mia(); });
    if (any_mia) {
      ShadowConfig sc;
      sc.k = config.shadow_count();
      sc.paired = true;  // naive attacks on the fair target need fair shadows
      sc.layer_sizes = recipe.layer_sizes;
      sc.train = recipe.train;
      sc.intervention = recipe.intervention;
      sc.dp = recipe.dp;
      sc.seed = run.stage_seeds["shadows"];
      sc.jobs = config.jobs;
      shadows = TrainShadows(splits.shadow_pool, sc);
      CheckNoLeakage(splits, *shadows);
    }

    stage = "attacks";
    AttackContext ctx;
    ctx.target_b = &run.biased_model.value();
    ctx.target_f = &run.fair_model.value();
    ctx.eval = &eval;
    ctx.pool = &splits.shadow_pool;
    ctx.shadows = shadows ? &*shadows : nullptr;
    ctx.settings = config.attacks.settings;
    ctx.settings.restriction = policy;
    ctx.settings.seed = run.stage_seeds["attacks"];
    for (const AttackSpec& spec : config.attacks.kinds) {
      std::vector<TargetRole> roles = {TargetRole::kPair};
      if (!spec.fd) roles = {TargetRole::kBiased, TargetRole::kFair};
      for (TargetRole role : roles) {
        AttackEntry entry;
        entry.kind = AttackName(spec);
        entry.target = TargetRoleName(role);
        try {
          entry.result = RunAttack(spec, role, ctx);
          ComputeAttackMetrics(entry);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kRestriction) throw;
          entry.status = "restricted";
          entry.message = e.what();
          entry.result = {};
        }
        run.attacks.push_back(std::move(entry));
      }
    }
  } catch (const Error& e) {
    run.failure = SeedFailure{stage, std::string(ErrorKindName(e.kind())), e.what()};
  } catch (const std::exception& e) {
    run.failure = SeedFailure{stage, "runtime", e.what()};
  }
  return run;
}

inline std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Seeds run in order; a failing seed is recorded and the run continues.
inline AuditReport RunExperiment(const ExperimentConfig& config,
                                 const std::function<void(const SeedRun&)>& on_seed = nullptr) {
  config.Validate();
  AuditReport report;
  report.config = config;
  report.config_hash = ConfigHash(config);
  report.timestamp = UtcTimestamp();
  for (uint64_t seed : config.active_seeds()) {
    report.seeds.push_back(RunSeed(config, seed));
    if (on_seed) on_seed(report.seeds.back());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report JSON

inline double Median(std::vector<double> values) {
  Require(!values.empty(), ErrorKind::kUndefinedMetric, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace internal {

inline Json FairnessJson(const std::optional<FairnessReport>& f) {
  if (!f) return nullptr;
  return {{"acc_t", f->acc_t},
          {"ba", f->ba},
          {"deo", f->deo},
          {"true_positives", f->true_positives},
          {"tpr", f->tpr},
          {"fpr", f->fpr}};
}

inline std::optional<FairnessReport> FairnessFromJson(const Json& j) {
  if (j.is_null()) return std::nullopt;
  FairnessReport f;
  f.acc_t = j.at("acc_t").get<double>();
  f.ba = j.at("ba").get<double>();
  f.deo = j.at("deo").get<double>();
  f.true_positives = j.at("true_positives").get<std::array<std::size_t, 2>>();
  f.tpr = j.at("tpr").get<std::array<double, 2>>();
  f.fpr = j.at("fpr").get<std::array<double, 2>>();
  return f;
}

inline Json AttackJson(const AttackEntry& a) {
  return {{"kind", a.kind},
          {"target", a.target},
          {"status", a.status},
          {"message", a.message},
          {"acc_a", Num(a.acc_a)},
          {"auc_a", Num(a.auc_a)},
          {"tpr_at_1pct", Num(a.tpr_at_1pct)},
          {"tpr_at_0_1pct", Num(a.tpr_at_0_1pct)},
          {"raw_auc", Num(a.raw_auc)},
          {"feature_width", a.feature_width},
          {"n_eval", a.n_eval}};
}

inline Json EpsilonJson(const std::optional<double>& eps) {
  if (!eps) return nullptr;
  return std::isfinite(*eps) ? Json(*eps) : Json("inf");
}

inline std::optional<double> EpsilonFromJson(const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

inline Json MedianBlock(const AuditReport& report) {
  std::vector<const SeedRun*> done;
  for (const auto& s : report.seeds) {
    if (s.completed()) done.push_back(&s);
  }
  Json block = {{"completed_seeds", done.size()},
                {"total_seeds", report.seeds.size()},
                {"partial", done.size() != report.seeds.size()}};
  if (done.empty()) {
    block["targets"] = nullptr;
    block["attacks"] = Json::array();
    block["epsilon"] = nullptr;
    return block;
  }
  Json targets = Json::object();
  for (const char* name : {"biased", "fair"}) {
    std::vector<double> acc, ba, deo;
    for (const SeedRun* s : done) {
      const FairnessReport& f = std::string(name) == "biased" ? *s->biased : *s->fair;
      acc.push_back(f.acc_t);
      ba.push_back(f.ba);
      deo.push_back(f.deo);
    }
    targets[name] = {{"acc_t", Median(acc)}, {"ba", Median(ba)}, {"deo", Median(deo)}};
  }
  block["targets"] = targets;
  Json attacks = Json::array();
  for (std::size_t i = 0; i < done.front()->attacks.size(); ++i) {
    const AttackEntry& first = done.front()->attacks[i];
    std::vector<double> acc, auc, t1, t01, raw;
    for (const SeedRun* s : done) {
      const AttackEntry& a = s->attacks[i];
      if (a.status != "ok") continue;
      acc.push_back(a.acc_a);
      auc.push_back(a.auc_a);
      if (a.tpr_at_1pct) t1.push_back(*a.tpr_at_1pct);
      if (a.tpr_at_0_1pct) t01.push_back(*a.tpr_at_0_1pct);
      if (a.raw_auc) raw.push_back(*a.raw_auc);
    }
    auto med = [](const std::vector<double>& v) { return v.empty() ? Json(nullptr) : Json(Median(v)); };
    attacks.push_back({{"kind", first.kind},
                       {"target", first.target},
                       {"count", acc.size()},
                       {"acc_a", med(acc)},
                       {"auc_a", med(auc)},
                       {"tpr_at_1pct", med(t1)},
                       {"tpr_at_0_1pct", med(t01)},
                       {"raw_auc", med(raw)}});
  }
  block["attacks"] = attacks;
  std::vector<double> eps;
  for (const SeedRun* s : done) {
    if (s->epsilon) eps.push_back(*s->epsilon);
  }
  block["epsilon"] = eps.empty() ? Json(nullptr) : EpsilonJson(Median(eps));
  return block;
}

}  // namespace internal

inline Json ReportToJson(const AuditReport& report) {
  Json seeds = Json::array();
  Json stage_seeds = Json::object();
  for (const auto& s : report.seeds) {
    Json attacks = Json::array();
    for (const auto& a : s.attacks) attacks.push_back(internal::AttackJson(a));
    Json failure = nullptr;
    if (s.failure) {
      failure = {{"stage", s.failure->stage}, {"kind", s.failure->kind}, {"message", s.failure->message}};
    }
    seeds.push_back({{"seed", s.seed},
                     {"status", s.completed() ? "completed" : "failed"},
                     {"failure", failure},
                     {"targets", {{"biased", internal::FairnessJson(s.biased)},
                                  {"fair", internal::FairnessJson(s.fair)}}},
                     {"attacks", attacks},
                     {"defense", {{"restriction", report.config.defense.restriction.ToString()},
                                  {"dp", report.config.defense.dp_enabled},
                                  {"epsilon", internal::EpsilonJson(s.epsilon)}}}});
    stage_seeds[std::to_string(s.seed)] = s.stage_seeds;
  }
  return {{"format_version", kReportFormatVersion},
          {"quick", report.config.quick},
          {"acceptance_grade", !report.config.quick},
          {"config", ConfigToJson(report.config)},
          {"provenance", {{"config_hash", report.config_hash},
                          {"format_version", kReportFormatVersion},
                          {"stage_seeds", stage_seeds},
                          {"timestamp", report.timestamp}}},
          {"seeds", seeds},
          {"median", internal::MedianBlock(report)}};
}

// Inverse of ReportToJson for everything except per-example scores and
// artifacts.
inline AuditReport ReportFromJson(const Json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    Require(version == kReportFormatVersion, ErrorKind::kCompatibility,
            "report format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kReportFormatVersion) + ")");
    AuditReport report;
    report.config = ParseConfig(j.at("config"));
    report.config.quick = j.at("quick").get<bool>();
    report.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    report.timestamp = j.at("provenance").at("timestamp").get<std::string>();
    const Json& stage_seeds = j.at("provenance").at("stage_seeds");
    for (const Json& sj : j.at("seeds")) {
      SeedRun s;
      s.seed = sj.at("seed").get<uint64_t>();
      s.stage_seeds = stage_seeds.at(std::to_string(s.seed)).get<std::map<std::string, uint64_t>>();
      if (!sj.at("failure").is_null()) {
        const Json& f = sj.at("failure");
        s.failure = SeedFailure{f.at("stage").get<std::string>(), f.at("kind").get<std::string>(),
                                f.at("message").get<std::string>()};
      }
      s.biased = internal::FairnessFromJson(sj.at("targets").at("biased"));
      s.fair = internal::FairnessFromJson(sj.at("targets").at("fair"));
      s.epsilon = internal::EpsilonFromJson(sj.at("defense").at("epsilon"));
      for (const Json& aj : sj.at("attacks")) {
        AttackEntry a;
        a.kind = aj.at("kind").get<std::string>();
        a.target = aj.at("target").get<std::string>();
        a.status = aj.at("status").get<std::string>();
        a.message = aj.at("message").get<std::string>();
        s.attacks.push_back(std::move(a));
      }
      report.seeds.push_back(std::move(s));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kSchema, std::string("malformed report document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Artifacts

namespace internal {

// {"crc32": ..., "format_version": ..., "payload": ...}, compact, so that any
// byte change either breaks parsing or changes the checksummed payload.
inline std::string EncodeContainer(const Json& payload) {
  const std::string body = payload.dump();
  const uint32_t crc = Crc32(reinterpret_cast<const uint8_t*>(body.data()), body.size());
  return Json{{"crc32", crc}, {"format_version", kLogFormatVersion}, {"payload", payload}}.dump() + "\n";
}

inline Json DecodeContainer(const std::string& text, const std::string& path) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    Fail(ErrorKind::kIntegrity, "corrupted log '" + path + "' (unparseable)");
  }
  Require(doc.is_object() && doc.contains("format_version") && doc.contains("crc32") &&
              doc.contains("payload") && doc["format_version"].is_number_integer() &&
              doc["crc32"].is_number_unsigned(),
          ErrorKind::kIntegrity, "corrupted log '" + path + "' (missing container fields)");
  const std::string body = doc["payload"].dump();
  const uint32_t crc = Crc32(reinterpret_cast<const uint8_t*>(body.data()), body.size());
  Require(crc == doc["crc32"].get<uint32_t>(), ErrorKind::kIntegrity,
          "corrupted log '" + path + "' (checksum mismatch)");
  const int version = doc["format_version"].get<int>();
  Require(version == kLogFormatVersion, ErrorKind::kCompatibility,
          "log '" + path + "' has format version " + std::to_string(version) +
              ", this build reads version " + std::to_string(kLogFormatVersion));
  return doc["payload"];
}

inline std::string ReadText(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline std::string SeedDir(uint64_t seed) { return "seed-" + std::to_string(seed); }

inline Json AttackScoresJson(const SeedRun& s) {
  Json out = Json::array();
  for (const auto& a : s.attacks) {
    out.push_back({{"kind", a.kind},
                   {"target", a.target},
                   {"ids", a.result.ids},
                   {"scores", a.result.scores},
                   {"truth", a.result.truth},
                   {"feature_width", a.result.feature_width},
                   {"raw_auc", Num(a.result.raw_auc)}});
  }
  return out;
}

}  // namespace internal

// Layout under dir: models/seed-N/{biased,fair}.model, logs/seed-N.json
// (prediction log and attack scores), logs/run.json (the report document).
inline void SaveArtifacts(const std::string& dir, const AuditReport& report) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "models", ec);
  fs::create_directories(fs::path(dir) / "logs", ec);
  Require(!ec, ErrorKind::kIo, "cannot create output directory '" + dir + "': " + ec.message());
  for (const auto& s : report.seeds) {
    const fs::path model_dir = fs::path(dir) / "models" / internal::SeedDir(s.seed);
    if (s.biased_model || s.fair_model) {
      fs::create_directories(model_dir, ec);
      Require(!ec, ErrorKind::kIo, "cannot create '" + model_dir.string() + "'");
    }
    if (s.biased_model) SaveModel(*s.biased_model, (model_dir / "biased.model").string());
    if (s.fair_model) SaveModel(*s.fair_model, (model_dir / "fair.model").string());
    const Json payload = {{"seed", s.seed},
                          {"prediction_log", s.prediction_log},
                          {"attacks", internal::AttackScoresJson(s)}};
    WriteFileAtomic((fs::path(dir) / "logs" / (internal::SeedDir(s.seed) + ".json")).string(),
                    internal::EncodeContainer(payload));
  }
  WriteFileAtomic((fs::path(dir) / "logs" / "run.json").string(),
                  internal::EncodeContainer(ReportToJson(report)));
}

// Rebuilds the report from saved logs; attack metrics are recomputed from the
// logged scores.
inline AuditReport LoadArtifacts(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string run_path = (fs::path(dir) / "logs" / "run.json").string();
  Require(fs::exists(run_path), ErrorKind::kIo, "no run log at '" + run_path + "'");
  AuditReport report = ReportFromJson(internal::DecodeContainer(internal::ReadText(run_path), run_path));
  for (auto& s : report.seeds) {
    const fs::path model_dir = fs::path(dir) / "models" / internal::SeedDir(s.seed);
    if (fs::exists(model_dir / "biased.model")) s.biased_model = LoadModel((model_dir / "biased.model").string());
    if (fs::exists(model_dir / "fair.model")) s.fair_model = LoadModel((model_dir / "fair.model").string());
    const std::string log_path = (fs::path(dir) / "logs" / (internal::SeedDir(s.seed) + ".json")).string();
    const Json payload = internal::DecodeContainer(internal::ReadText(log_path), log_path);
    try {
      s.prediction_log = payload.at("prediction_log");
      const Json& attacks = payload.at("attacks");
      Require(attacks.size() == s.attacks.size(), ErrorKind::kIntegrity,
              "attack log of seed " + std::to_string(s.seed) + " does not match the run log");
      for (std::size_t i = 0; i < s.attacks.size(); ++i) {
        AttackEntry& a = s.attacks[i];
        const Json& aj = attacks[i];
        Require(aj.at("kind") == a.kind && aj.at("target") == a.target, ErrorKind::kIntegrity,
                "attack log of seed " + std::to_string(s.seed) + " is out of order");
        a.result.ids = aj.at("ids").get<std::vector<uint64_t>>();
        a.result.scores = aj.at("scores").get<std::vector<double>>();
        a.result.truth = aj.at("truth").get<std::vector<int>>();
        a.result.feature_width = aj.at("feature_width").get<std::size_t>();
        a.result.raw_auc = aj.at("raw_auc").is_null() ? std::nan("") : aj.at("raw_auc").get<double>();
        if (a.status == "ok") ComputeAttackMetrics(a);
      }
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kSchema, "malformed seed log '" + log_path + "': " + e.what());
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace internal {

inline std::string CsvNum(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string CsvNum(const std::optional<double>& v) { return v ? CsvNum(*v) : ""; }

inline std::string AttacksCsv(const AuditReport& report) {
  std::string out = "seed,target,kind,status,acc_a,auc_a,tpr_at_1pct,tpr_at_0_1pct,raw_auc,n_eval\n";
  for (const auto& s : report.seeds) {
    for (const auto& a : s.attacks) {
      out += std::to_string(s.seed) + "," + a.target + "," + a.kind + "," + a.status + "," +
             CsvNum(a.acc_a) + "," + CsvNum(a.auc_a) + "," + CsvNum(a.tpr_at_1pct) + "," +
             CsvNum(a.tpr_at_0_1pct) + "," + CsvNum(a.raw_auc) + "," + std::to_string(a.n_eval) + "\n";
    }
  }
  return out;
}

inline std::string TargetsCsv(const AuditReport& report) {
  std::string out = "seed,model,acc_t,ba,deo,tpr_s0,tpr_s1,fpr_s0,fpr_s1,epsilon\n";
  for (const auto& s : report.seeds) {
    for (const auto& [name, f] : {std::pair{"biased", &s.biased}, std::pair{"fair", &s.fair}}) {
      if (!f->has_value()) continue;
      const FairnessReport& r = **f;
      out += std::to_string(s.seed) + "," + name + "," + CsvNum(r.acc_t) + "," + CsvNum(r.ba) + "," +
             CsvNum(r.deo) + "," + CsvNum(r.tpr[0]) + "," + CsvNum(r.tpr[1]) + "," +
             CsvNum(r.fpr[0]) + "," + CsvNum(r.fpr[1]) + "," + CsvNum(s.epsilon) + "\n";
    }
  }
  return out;
}

inline std::string MedianCsv(const Json& median) {
  std::string out = "target,kind,count,acc_a,auc_a,tpr_at_1pct,tpr_at_0_1pct,raw_auc\n";
  auto cell = [](const Json& v) { return v.is_null() ? std::string() : CsvNum(v.get<double>()); };
  for (const Json& a : median.at("attacks")) {
    out += a["target"].get<std::string>() + "," + a["kind"].get<std::string>() + "," +
           std::to_string(a["count"].get<std::size_t>()) + "," + cell(a["acc_a"]) + "," +
           cell(a["auc_a"]) + "," + cell(a["tpr_at_1pct"]) + "," + cell(a["tpr_at_0_1pct"]) + "," +
           cell(a["raw_auc"]) + "\n";
  }
  return out;
}

}  // namespace internal

// formats: any of "json", "csv". CSV output also writes one ROC curve per
// scored attack under roc/.
inline void EmitReport(const AuditReport& report, const std::string& dir,
                       const std::set<std::string>& formats) {
  namespace fs = std::filesystem;
  for (const auto& f : formats) {
    Require(f == "json" || f == "csv", ErrorKind::kValidation, "unknown report format '" + f + "'");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  Require(!ec, ErrorKind::kIo, "cannot create output directory '" + dir + "': " + ec.message());
  const Json doc = ReportToJson(report);
  if (formats.count("json")) {
    WriteFileAtomic((fs::path(dir) / "report.json").string(), doc.dump(2) + "\n");
  }
  if (formats.count("csv")) {
    fs::create_directories(fs::path(dir) / "tables", ec);
    Require(!ec, ErrorKind::kIo, "cannot create tables directory under '" + dir + "'");
    WriteFileAtomic((fs::path(dir) / "tables" / "attacks.csv").string(), internal::AttacksCsv(report));
    WriteFileAtomic((fs::path(dir) / "tables" / "targets.csv").string(), internal::TargetsCsv(report));
    WriteFileAtomic((fs::path(dir) / "tables" / "median.csv").string(),
                    internal::MedianCsv(doc.at("median")));
    for (const auto& s : report.seeds) {
      for (const auto& a : s.attacks) {
        if (a.status != "ok" || a.result.scores.empty()) continue;
        const fs::path roc_dir = fs::path(dir) / "roc" / internal::SeedDir(s.seed);
        fs::create_directories(roc_dir, ec);
        Require(!ec, ErrorKind::kIo, "cannot create '" + roc_dir.string() + "'");
        WriteRocCsv(RocPoints(a.result.scores, a.result.truth),
                    (roc_dir / (a.target + "_" + a.kind + ".csv")).string());
      }
    }
  }
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_EXPERIMENT_H_
