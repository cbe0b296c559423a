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

// How a target (or a shadow mimicking it) is trained: architecture, optimizer
// settings, fairness intervention and optional DP-SGD.

#ifndef FAIRAUDIT_RECIPE_H_
#define FAIRAUDIT_RECIPE_H_

#include <optional>
#include <vector>

#include "fairaudit/dataset.h"
#include "fairaudit/defenses.h"
#include "fairaudit/fairness.h"
#include "fairaudit/nn.h"
#include "fairaudit/rng.h"

namespace fairaudit {

struct TrainingRecipe {
  std::vector<int> layer_sizes = {16, 32, 16, 2};
  TrainConfig train;
  InterventionConfig intervention;
  std::optional<DpConfig> dp;
};

struct TrainedModel {
  MlpModel model;
  double epsilon = 0.0;  // 0 unless trained with DP-SGD
};

inline TrainedModel TrainBiasedModel(const TrainingRecipe& recipe, const LabeledDataset& data,
                                     uint64_t init_seed, uint64_t train_seed) {
  const MlpModel init = InitMlp(recipe.layer_sizes, init_seed);
  TrainConfig train = recipe.train;
  train.seed = train_seed;
  if (recipe.dp) {
    DpResult r = DpSgdTrain(init, data, train, *recipe.dp);
    return {std::move(r.model), r.epsilon};
  }
  return {Train(init, data, train), 0.0};
}

// Same initialization and shuffle seed as the biased partner. DP-SGD needs a
// loss that decomposes per example, so under DP the intervention falls back to
// group reweighting.
inline TrainedModel TrainFairModel(const TrainingRecipe& recipe, const LabeledDataset& data,
                                   uint64_t init_seed, uint64_t train_seed) {
  const MlpModel init = InitMlp(recipe.layer_sizes, init_seed);
  TrainConfig train = recipe.train;
  train.seed = train_seed;
  if (recipe.dp) {
    train.sample_weights = GroupBalanceWeights(data.groups);
    DpResult r = DpSgdTrain(init, data, train, *recipe.dp);
    return {std::move(r.model), r.epsilon};
  }
  InterventionConfig intervention = recipe.intervention;
  intervention.train = train;
  return {TrainFair(init, data, intervention), 0.0};
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_RECIPE_H_
