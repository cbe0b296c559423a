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

// Experiment configuration: a JSON document (// and /* */ comments allowed)
// with a fixed set of key paths. Unknown keys are rejected.

#ifndef FAIRAUDIT_CONFIG_H_
#define FAIRAUDIT_CONFIG_H_

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/attacks.h"
#include "fairaudit/dataset.h"
#include "fairaudit/defenses.h"
#include "fairaudit/error.h"
#include "fairaudit/fairness.h"
#include "fairaudit/recipe.h"

namespace fairaudit {

using Json = nlohmann::json;

struct DatasetConfig {
  std::string source = "synthetic";  // or "csv"
  SyntheticSpec synthetic;
  std::string csv_path;
  CsvSchema csv;
  std::optional<double> csv_skew_ratio;  // csv only; synthetic data is generated skewed
  SplitSpec split;
};

struct AttackPlan {
  std::vector<AttackSpec> kinds = AllAttackSpecs();
  std::size_t shadows = 64;
  std::size_t quick_shadows = 16;
  AttackSettings settings;
};

struct DefenseConfig {
  RestrictionPolicy restriction;
  bool dp_enabled = false;
  DpConfig dp;
  // Training schedule for DP-SGD runs; the target schedule when absent.
  std::optional<TrainConfig> dp_train;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  TrainingRecipe target;  // dp unused here; see defense
  AttackPlan attacks;
  DefenseConfig defense;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t quick_seeds = 2;
  std::string output_dir;
  // Run-time options, not part of the document.
  bool quick = false;
  int jobs = 1;

  void Validate() const {
    Require(!seeds.empty(), ErrorKind::kConfig, "seeds must be nonempty");
    Require(std::set<uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(),
            ErrorKind::kConfig, "seeds must be unique");
    Require(!attacks.kinds.empty(), ErrorKind::kConfig, "attacks.kinds must be nonempty");
    for (std::size_t i = 0; i < attacks.kinds.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        Require(!(attacks.kinds[i] == attacks.kinds[j]), ErrorKind::kConfig,
                "attack kind '" + AttackName(attacks.kinds[i]) + "' listed twice");
      }
    }
    Require(attacks.shadows >= 2 && attacks.quick_shadows >= 2, ErrorKind::kConfig,
            "shadow counts must be at least 2");
    Require(attacks.settings.attack_shadows >= 1, ErrorKind::kConfig,
            "attacks.attack_shadows must be at least 1");
    Require(quick_seeds >= 1, ErrorKind::kConfig, "quick_seeds must be at least 1");
    Require(dataset.source == "synthetic" || dataset.source == "csv", ErrorKind::kConfig,
            "dataset.source must be 'synthetic' or 'csv'");
    if (dataset.source == "synthetic") dataset.synthetic.Validate();
    if (dataset.source == "csv") {
      Require(!dataset.csv_path.empty(), ErrorKind::kConfig, "dataset.csv.path is required");
    }
    dataset.split.Validate();
    internal::ValidateLayerSizes(target.layer_sizes, 2);
    Require(target.layer_sizes.size() >= 3, ErrorKind::kConfig,
            "target.layers needs at least one hidden layer");
    target.train.Validate(0);
    target.intervention.Validate(0);
    defense.restriction.Validate();
    if (defense.dp_enabled) defense.dp.Validate();
  }

  std::size_t shadow_count() const { return quick ? attacks.quick_shadows : attacks.shadows; }

  std::vector<uint64_t> active_seeds() const {
    if (!quick || seeds.size() <= quick_seeds) return seeds;
    return {seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(quick_seeds)};
  }
};

namespace internal {

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    Require(j.is_object(), ErrorKind::kConfig, Where() + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      Require(seen_.count(key) > 0, ErrorKind::kConfig, "unknown key '" + Join(key) + "'");
    }
  }

  const Json* Get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    if (const Json* v = Get(key)) {
      try {
        out = v->get<T>();
      } catch (const nlohmann::json::exception&) {
        Fail(ErrorKind::kConfig, "'" + Join(key) + "' has the wrong type");
      }
    }
  }

  std::string Join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string Where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void ReadTrain(const Json& j, const std::string& path, TrainConfig& train) {
  ObjectReader r(j, path);
  r.Read("epochs", train.epochs);
  r.Read("batch_size", train.batch_size);
  r.Read("learning_rate", train.learning_rate);
  r.Read("weight_decay", train.weight_decay);
}

inline Json TrainJson(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"weight_decay", t.weight_decay}};
}

inline void ReadShift(ObjectReader& r, const std::string& key, std::array<std::vector<double>, 2>& out) {
  if (const Json* v = r.Get(key)) {
    Require(v->is_array() && v->size() == 2, ErrorKind::kConfig,
            "'" + r.Join(key) + "' must hold two vectors");
    try {
      out = {(*v)[0].get<std::vector<double>>(), (*v)[1].get<std::vector<double>>()};
    } catch (const nlohmann::json::exception&) {
      Fail(ErrorKind::kConfig, "'" + r.Join(key) + "' must hold numeric vectors");
    }
  }
}

}  // namespace internal

inline ExperimentConfig ParseConfig(const Json& doc) {
  ExperimentConfig c;
  {
    internal::ObjectReader root(doc, "");
    if (const Json* d = root.Get("dataset")) {
      internal::ObjectReader r(*d, "dataset");
      r.Read("source", c.dataset.source);
      r.Read("skew_ratio", c.dataset.synthetic.skew_ratio);
      if (const Json* s = r.Get("synthetic")) {
        internal::ObjectReader sr(*s, "dataset.synthetic");
        sr.Read("n", c.dataset.synthetic.n);
        sr.Read("dim", c.dataset.synthetic.dim);
        sr.Read("noise_std", c.dataset.synthetic.noise_std);
        internal::ReadShift(sr, "class_mean_shift", c.dataset.synthetic.class_mean_shift);
        internal::ReadShift(sr, "group_mean_shift", c.dataset.synthetic.group_mean_shift);
      }
      if (const Json* s = r.Get("csv")) {
        internal::ObjectReader cr(*s, "dataset.csv");
        cr.Read("path", c.dataset.csv_path);
        cr.Read("label_column", c.dataset.csv.label_column);
        cr.Read("group_column", c.dataset.csv.group_column);
        cr.Read("feature_columns", c.dataset.csv.feature_columns);
        cr.Read("id_column", c.dataset.csv.id_column);
      }
      if (const Json* s = r.Get("split")) {
        internal::ObjectReader sr(*s, "dataset.split");
        sr.Read("members", c.dataset.split.member_fraction);
        sr.Read("nonmembers", c.dataset.split.nonmember_fraction);
        sr.Read("shadow", c.dataset.split.shadow_fraction);
      }
      if (c.dataset.source == "csv") c.dataset.csv_skew_ratio = c.dataset.synthetic.skew_ratio;
    }
    if (const Json* t = root.Get("target")) {
      internal::ObjectReader r(*t, "target");
      r.Read("layers", c.target.layer_sizes);
      if (const Json* tr = r.Get("train")) internal::ReadTrain(*tr, "target.train", c.target.train);
    }
    if (const Json* iv = root.Get("intervention")) {
      internal::ObjectReader r(*iv, "intervention");
      std::string method = InterventionName(c.target.intervention.method);
      r.Read("method", method);
      c.target.intervention.method = ParseInterventionMethod(method);
      r.Read("lambda", c.target.intervention.lambda);
      r.Read("mixup_grid", c.target.intervention.mixup_grid);
      r.Read("adversary_layers", c.target.intervention.adversary_layers);
    }
    if (const Json* a = root.Get("attacks")) {
      internal::ObjectReader r(*a, "attacks");
      if (const Json* kinds = r.Get("kinds")) {
        Require(kinds->is_array(), ErrorKind::kConfig, "'attacks.kinds' must be a list");
        c.attacks.kinds.clear();
        for (const auto& k : *kinds) {
          Require(k.is_string(), ErrorKind::kConfig, "'attacks.kinds' entries must be strings");
          c.attacks.kinds.push_back(ParseAttackName(k.get<std::string>()));
        }
      }
      r.Read("shadows", c.attacks.shadows);
      r.Read("quick_shadows", c.attacks.quick_shadows);
      r.Read("attack_shadows", c.attacks.settings.attack_shadows);
      if (const Json* at = r.Get("attack_train")) {
        internal::ObjectReader ar(*at, "attacks.attack_train");
        ar.Read("hidden", c.attacks.settings.attack_train.hidden);
        ar.Read("epochs", c.attacks.settings.attack_train.epochs);
        ar.Read("batch_size", c.attacks.settings.attack_train.batch_size);
        ar.Read("learning_rate", c.attacks.settings.attack_train.learning_rate);
      }
    }
    if (const Json* d = root.Get("defense")) {
      internal::ObjectReader r(*d, "defense");
      std::string restriction = "none";
      r.Read("restriction", restriction);
      c.defense.restriction = RestrictionPolicy::Parse(restriction);
      if (const Json* dp = r.Get("dp")) {
        internal::ObjectReader dr(*dp, "defense.dp");
        dr.Read("enabled", c.defense.dp_enabled);
        dr.Read("clip_norm", c.defense.dp.clip_norm);
        dr.Read("noise_multiplier", c.defense.dp.noise_multiplier);
        dr.Read("delta", c.defense.dp.delta);
        if (const Json* tr = dr.Get("train")) {
          c.defense.dp_train = c.target.train;
          internal::ReadTrain(*tr, "defense.dp.train", *c.defense.dp_train);
        }
      }
    }
    root.Read("seeds", c.seeds);
    root.Read("quick_seeds", c.quick_seeds);
    root.Read("output_dir", c.output_dir);
  }
  c.Validate();
  return c;
}

inline ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buffer.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorKind::kConfig, "cannot parse config '" + path + "': " + e.what());
  }
  return ParseConfig(doc);
}

// Canonical form of every document key; the config hash is taken over it.
inline Json ConfigToJson(const ExperimentConfig& c) {
  Json kinds = Json::array();
  for (const auto& k : c.attacks.kinds) kinds.push_back(AttackName(k));
  const auto& s = c.dataset.synthetic;
  Json out = {
      {"dataset",
       {{"source", c.dataset.source},
        {"skew_ratio", s.skew_ratio},
        {"synthetic",
         {{"n", s.n},
          {"dim", s.dim},
          {"noise_std", s.noise_std},
          {"class_mean_shift", s.class_mean_shift},
          {"group_mean_shift", s.group_mean_shift}}},
        {"csv",
         {{"path", c.dataset.csv_path},
          {"label_column", c.dataset.csv.label_column},
          {"group_column", c.dataset.csv.group_column},
          {"feature_columns", c.dataset.csv.feature_columns},
          {"id_column", c.dataset.csv.id_column}}},
        {"split",
         {{"members", c.dataset.split.member_fraction},
          {"nonmembers", c.dataset.split.nonmember_fraction},
          {"shadow", c.dataset.split.shadow_fraction}}}}},
      {"target", {{"layers", c.target.layer_sizes}, {"train", internal::TrainJson(c.target.train)}}},
      {"intervention",
       {{"method", InterventionName(c.target.intervention.method)},
        {"lambda", c.target.intervention.lambda},
        {"mixup_grid", c.target.intervention.mixup_grid},
        {"adversary_layers", c.target.intervention.adversary_layers}}},
      {"attacks",
       {{"kinds", kinds},
        {"shadows", c.attacks.shadows},
        {"quick_shadows", c.attacks.quick_shadows},
        {"attack_shadows", c.attacks.settings.attack_shadows},
        {"attack_train",
         {{"hidden", c.attacks.settings.attack_train.hidden},
          {"epochs", c.attacks.settings.attack_train.epochs},
          {"batch_size", c.attacks.settings.attack_train.batch_size},
          {"learning_rate", c.attacks.settings.attack_train.learning_rate}}}}},
      {"defense",
       {{"restriction", c.defense.restriction.ToString()},
        {"dp",
         {{"enabled", c.defense.dp_enabled},
          {"clip_norm", c.defense.dp.clip_norm},
          {"noise_multiplier", c.defense.dp.noise_multiplier},
          {"delta", c.defense.dp.delta}}}}},
      {"seeds", c.seeds},
      {"quick_seeds", c.quick_seeds},
      {"output_dir", c.output_dir},
  };
  if (c.defense.dp_train) out["defense"]["dp"]["train"] = internal::TrainJson(*c.defense.dp_train);
  return out;
}

inline std::string ConfigHash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(Fnv1a64(ConfigToJson(c).dump())));
  return buf;
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_CONFIG_H_
