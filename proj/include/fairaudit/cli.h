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

// Batch command-line surface: generate, train, fair-train, defend, attack,
// report, experiment.

#ifndef FAIRAUDIT_CLI_H_
#define FAIRAUDIT_CLI_H_

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairaudit/attacks.h"
#include "fairaudit/config.h"
#include "fairaudit/dataset.h"
#include "fairaudit/defenses.h"
#include "fairaudit/error.h"
#include "fairaudit/experiment.h"
#include "fairaudit/fairness.h"
#include "fairaudit/model_io.h"
#include "fairaudit/recipe.h"

namespace fairaudit {

namespace internal {

struct CliOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  int jobs = 1;
  std::string out;
  bool quick = false;
};

inline ExperimentConfig CliConfig(const CliOptions& o) {
  ExperimentConfig config = o.config_path.empty() ? ParseConfig(Json::object()) : LoadConfig(o.config_path);
  if (o.seed) config.seeds = {*o.seed};
  config.quick = o.quick;
  Require(o.jobs >= 1, ErrorKind::kValidation, "--jobs must be at least 1");
  config.jobs = o.jobs;
  return config;
}

// --out, then FAIRAUDIT_OUT, then the config's output_dir, then ./fairaudit-out.
inline std::string OutputDir(const CliOptions& o, const ExperimentConfig& config) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("FAIRAUDIT_OUT"); env != nullptr && *env != '\0') return env;
  if (!config.output_dir.empty()) return config.output_dir;
  return "fairaudit-out";
}

inline LabeledDataset RowsWithMembership(const LabeledDataset& data, Membership m) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.membership[i] == m) rows.push_back(i);
  }
  return data.Subset(rows);
}

// Training rows: member rows when the CSV carries membership, else all rows.
inline LabeledDataset TrainingRows(const LabeledDataset& data) {
  LabeledDataset members = RowsWithMembership(data, Membership::kMember);
  return members.size() > 0 ? members : data;
}

inline void PrintFairness(std::ostream& out, const std::string& name, const MlpModel& model,
                          const LabeledDataset& data) {
  const LabeledDataset test = RowsWithMembership(data, Membership::kNonmember);
  const LabeledDataset& eval = test.size() > 0 ? test : data;
  const FairnessReport f = EvaluateFairness(model, eval);
  out << name << ": acc_t=" << f.acc_t << " ba=" << f.ba << " deo=" << f.deo << " (" << eval.size()
      << " rows)\n";
}

inline std::set<std::string> SplitFormats(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.insert(item);
  }
  Require(!out.empty(), ErrorKind::kValidation, "--format needs at least one of json,csv");
  return out;
}

}  // namespace internal

// Runs one invocation (args exclude the program name) and returns the exit
// code: 0 ok, 1 validation/config/usage, 2 runtime/numerical, 3
// integrity/compatibility.
inline int RunCli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                  std::ostream& err = std::cerr) {
  CLI::App app{"fairaudit: fairness-vs-privacy audits of binary classifiers"};
  app.require_subcommand(1);
  internal::CliOptions o;
  app.add_option("--config", o.config_path, "Experiment config file (JSON with comments)");
  app.add_option("--seed", o.seed, "Override the seed list with [N]");
  app.add_option("--jobs", o.jobs, "Worker threads for shadow training")->capture_default_str();
  app.add_option("--out", o.out, "Output directory (fallback: $FAIRAUDIT_OUT)");
  app.add_flag("--quick", o.quick, "Fewer shadows and seeds; not acceptance-grade");
  app.fallthrough();

  std::string data_path, output_path;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset CSV with split flags");
  generate->add_option("--output", output_path, "CSV path (default: <out>/data.csv)");

  auto* train = app.add_subcommand("train", "Train the biased target on member rows");
  auto* fair_train = app.add_subcommand("fair-train", "Train the fair target from the same init");
  auto* defend = app.add_subcommand("defend", "Train the target with DP-SGD and report epsilon");
  std::optional<double> sigma, clip;
  for (auto* sub : {train, fair_train, defend}) {
    sub->add_option("--data", data_path, "Training CSV (member=1 rows, or all rows)")->required();
    sub->add_option("--output", output_path, "Model path")->required();
  }
  defend->add_option("--sigma", sigma, "Noise multiplier (overrides defense.dp)");
  defend->add_option("--clip", clip, "Clipping norm (overrides defense.dp)");

  std::string target_path, fair_path, kind_name, eval_path, scores_path, restriction_text;
  bool as_fair = false;
  auto* attack = app.add_subcommand("attack", "Run one attack against saved models");
  attack->add_option("--target", target_path, "Attacked (biased) model")->required();
  attack->add_option("--fair", fair_path, "Fair model (required by fd_* kinds)");
  attack->add_option("--kind", kind_name,
                     "mia_score, mia_lira, aia_black, aia_white, or fd_ + any of these")
      ->required();
  attack->add_option("--eval", eval_path,
                     "CSV: member=1/0 rows are evaluated, rows with empty member form the pool")
      ->required();
  attack->add_flag("--as-fair", as_fair, "Naive kinds: --target is a fair model (fair shadows)");
  attack->add_option("--restriction", restriction_text,
                     "none, label_only, truncate:K or fair_isolation (overrides config)");
  attack->add_option("--scores", scores_path, "Write per-example scores CSV");

  std::string in_dir, formats = "json,csv";
  auto* report = app.add_subcommand("report", "Re-emit reports from saved logs");
  report->add_option("--in", in_dir, "Output directory of a previous experiment")->required();
  report->add_option("--format", formats, "json, csv or json,csv")->capture_default_str();

  auto* experiment = app.add_subcommand("experiment", "Run the full audit pipeline");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o_out, o_err;
    const int code = app.exit(e, o_out, o_err);
    out << o_out.str();
    err << o_err.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (*experiment) {
      Require(!o.config_path.empty(), ErrorKind::kValidation, "experiment needs --config PATH");
      ExperimentConfig config = internal::CliConfig(o);
      const std::string dir = internal::OutputDir(o, config);
      if (config.quick) out << "quick mode: reduced shadows and seeds, not acceptance-grade\n";
      const AuditReport result = RunExperiment(config, [&](const SeedRun& s) {
        if (s.completed()) {
          out << "seed " << s.seed << ": biased deo=" << s.biased->deo << " fair deo=" << s.fair->deo
              << "\n";
        } else {
          err << "seed " << s.seed << " failed in " << s.failure->stage << ": "
              << s.failure->message << "\n";
        }
      });
      SaveArtifacts(dir, result);
      EmitReport(result, dir, {"json", "csv"});
      const Json median = ReportToJson(result).at("median");
      out << "report: " << (std::filesystem::path(dir) / "report.json").string() << " ("
          << median.at("completed_seeds") << "/" << median.at("total_seeds") << " seeds completed)\n";
      return median.at("completed_seeds").get<std::size_t>() > 0 ? 0 : 2;
    }
    if (*report) {
      const AuditReport loaded = LoadArtifacts(in_dir);
      const std::string dir = o.out.empty() ? in_dir : o.out;
      EmitReport(loaded, dir, internal::SplitFormats(formats));
      out << "report re-emitted to " << dir << "\n";
      return 0;
    }
    ExperimentConfig config = internal::CliConfig(o);
    const uint64_t seed = config.seeds.front();
    if (*generate) {
      SyntheticSpec spec = config.dataset.synthetic;
      spec.seed = DeriveSeed(seed, "data");
      const LabeledDataset data = GenerateSynthetic(spec);
      SplitSpec split = config.dataset.split;
      split.seed = DeriveSeed(seed, "split");
      const SplitIndices idx = MakeSplitIndices(data.size(), split);
      LabeledDataset flagged = data;
      for (std::size_t r : idx.members) flagged.membership[r] = Membership::kMember;
      for (std::size_t r : idx.nonmembers) flagged.membership[r] = Membership::kNonmember;
      if (output_path.empty()) {
        const std::string dir = internal::OutputDir(o, config);
        std::filesystem::create_directories(dir);
        output_path = (std::filesystem::path(dir) / "data.csv").string();
      }
      WriteCsv(flagged, output_path);
      out << "wrote " << data.size() << " rows to " << output_path << "\n";
      return 0;
    }
    if (*train || *fair_train || *defend) {
      const LabeledDataset data = IngestCsv(data_path);
      const LabeledDataset rows = internal::TrainingRows(data);
      TrainingRecipe recipe = config.target;
      recipe.layer_sizes.front() = static_cast<int>(data.dim());
      if (*defend) {
        recipe.dp = config.defense.dp;
        if (config.defense.dp_train) recipe.train = *config.defense.dp_train;
        if (sigma) recipe.dp->noise_multiplier = *sigma;
        if (clip) recipe.dp->clip_norm = *clip;
      }
      const uint64_t init_seed = DeriveSeed(seed, "target-init");
      const uint64_t train_seed = DeriveSeed(seed, "target-train");
      const TrainedModel trained = *fair_train
                                       ? TrainFairModel(recipe, rows, init_seed, train_seed)
                                       : TrainBiasedModel(recipe, rows, init_seed, train_seed);
      SaveModel(trained.model, output_path);
      internal::PrintFairness(out, *fair_train ? "fair" : "biased", trained.model, data);
      if (*defend) out << "epsilon=" << trained.epsilon << " delta=" << recipe.dp->delta << "\n";
      out << "saved " << output_path << "\n";
      return 0;
    }
    if (*attack) {
      const AttackSpec spec = ParseAttackName(kind_name);
      Require(!spec.fd || !fair_path.empty(), ErrorKind::kValidation,
              kind_name + " is a fairness-discrepancy attack and needs the fair model via --fair");
      const MlpModel target = LoadModel(target_path);
      std::optional<MlpModel> fair;
      if (!fair_path.empty()) fair = LoadModel(fair_path);
      const LabeledDataset data = IngestCsv(eval_path);
      LabeledDataset eval = Concatenate(internal::RowsWithMembership(data, Membership::kMember),
                                        internal::RowsWithMembership(data, Membership::kNonmember));
      const LabeledDataset pool = internal::RowsWithMembership(data, Membership::kUnassigned);
      Require(eval.size() > 0, ErrorKind::kValidation, "--eval has no rows with member set to 1/0");
      Require(pool.size() > 0, ErrorKind::kValidation,
              "--eval has no pool rows (empty member column) for shadows and attack training");
      AttackContext ctx;
      TargetRole role = spec.fd ? TargetRole::kPair : TargetRole::kBiased;
      ctx.target_b = &target;
      if (fair) ctx.target_f = &*fair;
      if (as_fair && !spec.fd) {
        role = TargetRole::kFair;
        ctx.target_f = &target;
      }
      ctx.eval = &eval;
      ctx.pool = &pool;
      ctx.shadow_config.k = config.shadow_count();
      ctx.shadow_config.layer_sizes = target.layer_sizes;
      ctx.shadow_config.train = config.target.train;
      ctx.shadow_config.intervention = config.target.intervention;
      ctx.shadow_config.paired = spec.fd || role == TargetRole::kFair;
      ctx.shadow_config.seed = DeriveSeed(seed, "shadows");
      ctx.shadow_config.jobs = config.jobs;
      ctx.settings = config.attacks.settings;
      ctx.settings.restriction = restriction_text.empty() ? config.defense.restriction
                                                          : RestrictionPolicy::Parse(restriction_text);
      ctx.settings.seed = DeriveSeed(seed, "attacks");
      AttackEntry entry;
      entry.kind = kind_name;
      entry.target = TargetRoleName(role);
      entry.result = RunAttack(spec, role, ctx);
      ComputeAttackMetrics(entry);
      out << internal::AttackJson(entry).dump(2) << "\n";
      if (!scores_path.empty()) {
        std::string csv = "id,score,truth\n";
        for (std::size_t i = 0; i < entry.result.scores.size(); ++i) {
          csv += std::to_string(entry.result.ids[i]) + "," + internal::CsvNum(entry.result.scores[i]) +
                 "," + std::to_string(entry.result.truth[i]) + "\n";
        }
        WriteFileAtomic(scores_path, csv);
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error [" << ErrorKindName(e.kind()) << "]: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error [runtime]: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_CLI_H_
