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

// Group fairness metrics and in-processing fairness interventions.

#ifndef FAIRAUDIT_FAIRNESS_H_
#define FAIRAUDIT_FAIRNESS_H_

#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/dataset.h"
#include "fairaudit/error.h"
#include "fairaudit/nn.h"
#include "fairaudit/rng.h"

namespace fairaudit {

// ---------------------------------------------------------------------------
// Metrics

// Confusion counts per (group, label, predicted label).
struct GroupConfusion {
  // counts[s][y][pred]
  std::array<std::array<std::array<std::size_t, 2>, 2>, 2> counts{};

  GroupConfusion(std::span<const int> predictions, std::span<const int> labels,
                 std::span<const int> groups) {
    Require(predictions.size() == labels.size() && labels.size() == groups.size(),
            ErrorKind::kValidation, "predictions, labels and groups differ in length");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      Require((predictions[i] | labels[i] | groups[i]) >> 1 == 0, ErrorKind::kDomain,
              "predictions, labels and groups must be 0/1");
      ++counts[groups[i]][labels[i]][predictions[i]];
    }
  }

  std::size_t TruePositives(int s) const { return counts[s][1][1]; }
  std::size_t CellSize(int s, int y) const { return counts[s][y][0] + counts[s][y][1]; }
  std::size_t GroupSize(int s) const { return CellSize(s, 0) + CellSize(s, 1); }

  // P(pred = 1 | y, s)
  double PositiveRate(int s, int y) const {
    const std::size_t size = CellSize(s, y);
    Require(size > 0, ErrorKind::kUndefinedMetric,
            "empty (label " + std::to_string(y) + ", group " + std::to_string(s) + ") cell");
    return static_cast<double>(counts[s][y][1]) / static_cast<double>(size);
  }
};

// 1/2 * |TP_0 - TP_1| / (TP_0 + TP_1) from raw true-positive counts.
inline double BiasAmplification(std::span<const int> predictions, std::span<const int> labels,
                                std::span<const int> groups) {
  const GroupConfusion c(predictions, labels, groups);
  Require(c.GroupSize(0) > 0 && c.GroupSize(1) > 0, ErrorKind::kUndefinedMetric,
          "bias amplification needs both groups present");
  const double tp0 = static_cast<double>(c.TruePositives(0));
  const double tp1 = static_cast<double>(c.TruePositives(1));
  Require(tp0 + tp1 > 0.0, ErrorKind::kUndefinedMetric,
          "bias amplification undefined without true positives");
  return 0.5 * std::abs(tp0 - tp1) / (tp0 + tp1);
}

// 1/2 * (|TPR_0 - TPR_1| + |FPR_0 - FPR_1|)
inline double EqualizedOddsGap(std::span<const int> predictions, std::span<const int> labels,
                               std::span<const int> groups) {
  const GroupConfusion c(predictions, labels, groups);
  const double tpr_gap = std::abs(c.PositiveRate(0, 1) - c.PositiveRate(1, 1));
  const double fpr_gap = std::abs(c.PositiveRate(0, 0) - c.PositiveRate(1, 0));
  return 0.5 * (tpr_gap + fpr_gap);
}

struct FairnessReport {
  double acc_t = 0.0;
  double ba = 0.0;
  double deo = 0.0;
  std::array<std::size_t, 2> true_positives{};
  std::array<double, 2> tpr{};
  std::array<double, 2> fpr{};
};

inline FairnessReport EvaluateFairness(std::span<const int> predictions,
                                       std::span<const int> labels,
                                       std::span<const int> groups) {
  const GroupConfusion c(predictions, labels, groups);
  FairnessReport report;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  report.acc_t = static_cast<double>(correct) / static_cast<double>(labels.size());
  report.ba = BiasAmplification(predictions, labels, groups);
  report.deo = EqualizedOddsGap(predictions, labels, groups);
  for (int s = 0; s < 2; ++s) {
    report.true_positives[s] = c.TruePositives(s);
    report.tpr[s] = c.PositiveRate(s, 1);
    report.fpr[s] = c.PositiveRate(s, 0);
  }
  return report;
}

inline FairnessReport EvaluateFairness(const MlpModel& model, const LabeledDataset& data) {
  const std::vector<int> predictions = PredictLabels(Forward(model, data.features));
  return EvaluateFairness(predictions, data.labels, data.groups);
}

// ---------------------------------------------------------------------------
// Interventions

enum class InterventionMethod { kReweight, kBalancedSampling, kEoPenalty, kFairMixup, kAdversarial };

inline std::string InterventionName(InterventionMethod m) {
  switch (m) {
    case InterventionMethod::kReweight: return "reweight";
    case InterventionMethod::kBalancedSampling: return "balanced_sampling";
    case InterventionMethod::kEoPenalty: return "eo_penalty";
    case InterventionMethod::kFairMixup: return "fair_mixup";
    case InterventionMethod::kAdversarial: return "adversarial";
  }
  return "unknown";
}

inline InterventionMethod ParseInterventionMethod(const std::string& name) {
  for (auto m : {InterventionMethod::kReweight, InterventionMethod::kBalancedSampling,
                 InterventionMethod::kEoPenalty, InterventionMethod::kFairMixup,
                 InterventionMethod::kAdversarial}) {
    if (InterventionName(m) == name) return m;
  }
  Fail(ErrorKind::kConfig, "unknown intervention method '" + name + "'");
}

struct InterventionConfig {
  InterventionMethod method = InterventionMethod::kEoPenalty;
  double lambda = 1.0;
  std::vector<double> mixup_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> adversary_layers = {8};  // hidden widths; beta = lambda
  TrainConfig train;

  void Validate(std::size_t n) const {
    Require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::kConfig,
            "intervention lambda must be non-negative");
    if (method == InterventionMethod::kFairMixup) {
      Require(mixup_grid.size() >= 2, ErrorKind::kConfig, "mixup grid needs at least 2 points");
    }
    for (int w : adversary_layers) {
      Require(w > 0, ErrorKind::kConfig, "adversary layer widths must be positive");
    }
    train.Validate(n);
  }
};

// Per-row weight n / (2 n_s): both groups carry equal total weight.
inline std::vector<double> GroupBalanceWeights(std::span<const int> groups) {
  std::array<double, 2> count{};
  for (int s : groups) count[s] += 1.0;
  Require(count[0] > 0 && count[1] > 0, ErrorKind::kConfig,
          "reweighting needs both groups present");
  const double n = static_cast<double>(groups.size());
  std::vector<double> weights(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) weights[i] = n / (2.0 * count[groups[i]]);
  return weights;
}

struct PenaltyValue {
  double value = 0.0;
  std::vector<double> d_prob1;  // derivative with respect to each row's P(class 1)
};

// Soft equalized-odds gap: indicator rates are replaced by the mean predicted
// probability of class 1 in each (label, group) cell. A label whose cells are
// not both populated contributes nothing.
inline PenaltyValue SoftEqualizedOddsGap(std::span<const double> prob1, std::span<const int> labels,
                                         std::span<const int> groups) {
  PenaltyValue out;
  out.d_prob1.assign(prob1.size(), 0.0);
  std::array<std::array<double, 2>, 2> sum{}, count{};
  for (std::size_t i = 0; i < prob1.size(); ++i) {
    sum[labels[i]][groups[i]] += prob1[i];
    count[labels[i]][groups[i]] += 1.0;
  }
  for (int y = 0; y < 2; ++y) {
    if (count[y][0] == 0.0 || count[y][1] == 0.0) continue;
    const double gap = sum[y][0] / count[y][0] - sum[y][1] / count[y][1];
    out.value += 0.5 * std::abs(gap);
    const double sign = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    for (std::size_t i = 0; i < prob1.size(); ++i) {
      if (labels[i] != y) continue;
      out.d_prob1[i] += groups[i] == 0 ? 0.5 * sign / count[y][0] : -0.5 * sign / count[y][1];
    }
  }
  return out;
}

namespace internal {

// Adds scale * dF/dlogits for dF/dP(class 1) given per row.
inline void AddProb1Gradient(const Matrix& probs, std::span<const double> d_prob1, double scale,
                             Matrix& d_logits) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double g = scale * d_prob1[static_cast<std::size_t>(i)] * probs(i, 0) * probs(i, 1);
    d_logits(i, 0) -= g;
    d_logits(i, 1) += g;
  }
}

inline void ValidateGrid(std::span<const double> t_grid) {
  Require(t_grid.size() >= 2, ErrorKind::kConfig, "mixup grid needs at least 2 points");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    Require(t_grid[i] >= 0.0 && t_grid[i] <= 1.0, ErrorKind::kConfig,
            "mixup grid points must lie in [0, 1]");
    Require(i == 0 || t_grid[i] > t_grid[i - 1], ErrorKind::kConfig,
            "mixup grid must be strictly increasing");
  }
}

}  // namespace internal

// Mixed batch x_t = t * x_0 + (1 - t) * x_1, rows paired by index.
inline Matrix MixBatches(const Matrix& batch_s0, const Matrix& batch_s1, double t) {
  return t * batch_s0 + (1.0 - t) * batch_s1;
}

struct MixupPenalty {
  double penalty = 0.0;
  Parameters grads;
  std::vector<double> curve;  // m(t) for each grid point
};

// Path-smoothness penalty on the group interpolation curve: the mean over
// consecutive grid points of |m(t_{i+1}) - m(t_i)| / (t_{i+1} - t_i), where
// m(t) is the mean P(class 1) on the mixed batch. Rows of the two batches are
// paired by index; callers draw the batches in seeded random order.
inline MixupPenalty FairMixupPenalty(const MlpModel& model, const Matrix& batch_s0,
                                     const Matrix& batch_s1, std::span<const double> t_grid) {
  internal::ValidateGrid(t_grid);
  Require(batch_s0.rows() > 0 && batch_s1.rows() > 0, ErrorKind::kValidation,
          "mixup batches must be nonempty");
  Require(batch_s0.rows() == batch_s1.rows() && batch_s0.cols() == batch_s1.cols(),
          ErrorKind::kShape, "mixup batches must have the same shape");
  const std::size_t points = t_grid.size();
  const std::size_t segments = points - 1;
  std::vector<ForwardCache> caches(points);
  std::vector<Matrix> probs(points);
  MixupPenalty out;
  out.curve.resize(points);
  const double rows = static_cast<double>(batch_s0.rows());
  for (std::size_t k = 0; k < points; ++k) {
    probs[k] = Softmax(ForwardLogits(model, MixBatches(batch_s0, batch_s1, t_grid[k]), &caches[k]));
    out.curve[k] = probs[k].col(1).sum() / rows;
  }
  std::vector<double> d_curve(points, 0.0);
  for (std::size_t i = 0; i < segments; ++i) {
    const double dt = t_grid[i + 1] - t_grid[i];
    const double diff = out.curve[i + 1] - out.curve[i];
    out.penalty += std::abs(diff) / dt / static_cast<double>(segments);
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    d_curve[i + 1] += sign / dt / static_cast<double>(segments);
    d_curve[i] -= sign / dt / static_cast<double>(segments);
  }
  out.grads = model.params.ZerosLike();
  for (std::size_t k = 0; k < points; ++k) {
    if (d_curve[k] == 0.0) continue;
    Matrix d_logits = Matrix::Zero(probs[k].rows(), 2);
    const std::vector<double> d_prob1(static_cast<std::size_t>(probs[k].rows()), d_curve[k] / rows);
    internal::AddProb1Gradient(probs[k], d_prob1, 1.0, d_logits);
    out.grads.Axpy(1.0, Backward(model, caches[k], d_logits));
  }
  return out;
}

struct AdversarialGrads {
  double task_loss = 0.0;
  double adversary_loss = 0.0;
  Parameters task;       // plain task cross-entropy gradient, all layers
  Parameters combined;   // head: task only; extractor: task - beta * adversary
  Parameters adversary;  // adversary descends its own cross-entropy on s
};

// Gradient reversal: the adversary predicts the sensitive attribute from the
// embedding h(x); the extractor receives the task gradient minus beta times the
// adversary-loss gradient propagated through the embedding.
inline AdversarialGrads AdversarialDebiasGrads(const MlpModel& model, const MlpModel& adversary,
                                               const Matrix& batch, std::span<const int> labels,
                                               std::span<const int> groups, double beta) {
  Require(adversary.input_dim() == model.embedding_dim(), ErrorKind::kShape,
          "adversary input width must equal the embedding dimension");
  ForwardCache cache;
  const Matrix logits = ForwardLogits(model, batch, &cache);
  Matrix d_task;
  AdversarialGrads out;
  out.task_loss = internal::CrossEntropy(logits, labels, {}, &d_task);
  out.task = Backward(model, cache, d_task);

  ForwardCache adv_cache;
  const Matrix adv_logits = ForwardLogits(adversary, cache.activations.back(), &adv_cache);
  Matrix d_adv;
  out.adversary_loss = internal::CrossEntropy(adv_logits, groups, {}, &d_adv);
  const std::vector<Matrix> adv_deltas = BackwardDeltas(adversary, adv_cache, d_adv);
  out.adversary = GradsFromDeltas(adv_cache, adv_deltas);

  const Matrix reversed = -beta * (adv_deltas.front() * adversary.params.weights.front());
  out.combined = Backward(model, cache, d_task, &reversed);
  return out;
}

namespace internal {

// Minibatches with equal group counts; each group is a cyclic stream that
// reshuffles when exhausted, so the minority is revisited with replacement.
inline BatchPlanner GroupBalancedBatches(const LabeledDataset& data, int batch_size) {
  struct Stream {
    std::vector<std::size_t> rows;
    std::size_t next = 0;
  };
  auto streams = std::make_shared<std::array<Stream, 2>>();
  for (int s = 0; s < 2; ++s) (*streams)[s].rows = data.RowsWhere(-1, s);
  (*streams)[0].next = (*streams)[0].rows.size();
  (*streams)[1].next = (*streams)[1].rows.size();
  const std::size_t n = data.size();
  return [streams, n, batch_size](Rng& rng) {
    const std::size_t steps = (n + static_cast<std::size_t>(batch_size) - 1) /
                              static_cast<std::size_t>(batch_size);
    const std::array<std::size_t, 2> take = {static_cast<std::size_t>((batch_size + 1) / 2),
                                             static_cast<std::size_t>(batch_size / 2)};
    std::vector<std::vector<std::size_t>> batches(steps);
    for (auto& batch : batches) {
      for (int s = 0; s < 2; ++s) {
        Stream& stream = (*streams)[s];
        for (std::size_t k = 0; k < take[s]; ++k) {
          if (stream.next == stream.rows.size()) {
            rng.Shuffle(std::span(stream.rows));
            stream.next = 0;
          }
          batch.push_back(stream.rows[stream.next++]);
        }
      }
    }
    return batches;
  };
}

inline std::vector<std::size_t> SampleRows(const std::vector<std::size_t>& pool, std::size_t count,
                                           Rng& rng) {
  std::vector<std::size_t> out(count);
  for (auto& r : out) r = pool[rng.Below(pool.size())];
  return out;
}

}  // namespace internal

// Trains a fair counterpart of a model from model_init with the configured
// intervention. With lambda = 0 the penalty methods reduce exactly to plain
// Train under the same seed.
inline MlpModel TrainFair(const MlpModel& model_init, const LabeledDataset& data,
                          const InterventionConfig& config) {
  data.Validate();
  config.Validate(data.size());
  for (int y = 0; y < 2; ++y) {
    for (int s = 0; s < 2; ++s) {
      Require(!data.RowsWhere(y, s).empty(), ErrorKind::kConfig,
              "fairness interventions need both groups in both classes");
    }
  }
  const TrainConfig& train = config.train;
  switch (config.method) {
    case InterventionMethod::kReweight: {
      TrainConfig weighted = train;
      weighted.sample_weights = GroupBalanceWeights(data.groups);
      return Train(model_init, data, weighted);
    }
    case InterventionMethod::kBalancedSampling: {
      const BatchObjective objective = [&](const MlpModel& model, std::span<const std::size_t> batch,
                                           Parameters& grads) {
        LossAndGradient lg =
            LossAndGrads(model, GatherRows(data.features, batch), Gather(data.labels, batch));
        grads = std::move(lg.grads);
        return lg.loss;
      };
      return TrainWith(model_init, train, internal::GroupBalancedBatches(data, train.batch_size),
                       objective);
    }
    case InterventionMethod::kEoPenalty: {
      if (config.lambda == 0.0) return Train(model_init, data, train);
      const BatchObjective objective = [&](const MlpModel& model, std::span<const std::size_t> batch,
                                           Parameters& grads) {
        ForwardCache cache;
        const Matrix logits = ForwardLogits(model, GatherRows(data.features, batch), &cache);
        const std::vector<int> y = Gather(data.labels, batch);
        const std::vector<int> s = Gather(data.groups, batch);
        Matrix d_logits;
        double loss = internal::CrossEntropy(logits, y, {}, &d_logits);
        const Matrix probs = Softmax(logits);
        std::vector<double> p1(static_cast<std::size_t>(probs.rows()));
        for (Eigen::Index i = 0; i < probs.rows(); ++i) p1[static_cast<std::size_t>(i)] = probs(i, 1);
        const PenaltyValue penalty = SoftEqualizedOddsGap(p1, y, s);
        loss += config.lambda * penalty.value;
        internal::AddProb1Gradient(probs, penalty.d_prob1, config.lambda, d_logits);
        grads = Backward(model, cache, d_logits);
        return loss;
      };
      return TrainWith(model_init, train, ShuffledBatches(data.size(), train.batch_size), objective);
    }
    case InterventionMethod::kFairMixup: {
      if (config.lambda == 0.0) return Train(model_init, data, train);
      std::array<std::array<std::vector<std::size_t>, 2>, 2> cells;
      for (int y = 0; y < 2; ++y) {
        for (int s = 0; s < 2; ++s) cells[y][s] = data.RowsWhere(y, s);
      }
      const std::size_t mix_rows = std::max(1, train.batch_size / 4);
      auto mix_rng = std::make_shared<Rng>(DeriveSeed(train.seed, "fair-mixup-pairs"));
      const BatchObjective objective = [&, mix_rng](const MlpModel& model,
                                                    std::span<const std::size_t> batch,
                                                    Parameters& grads) {
        LossAndGradient lg =
            LossAndGrads(model, GatherRows(data.features, batch), Gather(data.labels, batch));
        double loss = lg.loss;
        grads = std::move(lg.grads);
        // Class-conditional mixing, one penalty per label.
        for (int y = 0; y < 2; ++y) {
          const auto rows0 = internal::SampleRows(cells[y][0], mix_rows, *mix_rng);
          const auto rows1 = internal::SampleRows(cells[y][1], mix_rows, *mix_rng);
          const MixupPenalty mix = FairMixupPenalty(model, GatherRows(data.features, rows0),
                                                    GatherRows(data.features, rows1),
                                                    config.mixup_grid);
          loss += config.lambda * mix.penalty;
          grads.Axpy(config.lambda, mix.grads);
        }
        return loss;
      };
      return TrainWith(model_init, train, ShuffledBatches(data.size(), train.batch_size), objective);
    }
    case InterventionMethod::kAdversarial: {
      std::vector<int> adv_sizes = {static_cast<int>(model_init.embedding_dim())};
      adv_sizes.insert(adv_sizes.end(), config.adversary_layers.begin(),
                       config.adversary_layers.end());
      adv_sizes.push_back(2);
      auto adversary =
          std::make_shared<MlpModel>(InitMlp(adv_sizes, DeriveSeed(train.seed, "adversary-init")));
      const BatchObjective objective = [&, adversary](const MlpModel& model,
                                                      std::span<const std::size_t> batch,
                                                      Parameters& grads) {
        AdversarialGrads g =
            AdversarialDebiasGrads(model, *adversary, GatherRows(data.features, batch),
                                   Gather(data.labels, batch), Gather(data.groups, batch),
                                   config.lambda);
        SgdStepInPlace(*adversary, g.adversary, train.learning_rate, train.weight_decay);
        grads = std::move(g.combined);
        return g.task_loss;
      };
      return TrainWith(model_init, train, ShuffledBatches(data.size(), train.batch_size), objective);
    }
  }
  Fail(ErrorKind::kConfig, "unhandled intervention method");
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_FAIRNESS_H_
