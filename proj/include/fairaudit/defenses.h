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

// DP-SGD training with a closed-form (epsilon, delta) accountant, and
// prediction-interface restriction policies.

#ifndef FAIRAUDIT_DEFENSES_H_
#define FAIRAUDIT_DEFENSES_H_

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/dataset.h"
#include "fairaudit/error.h"
#include "fairaudit/nn.h"
#include "fairaudit/rng.h"

namespace fairaudit {

struct DpConfig {
  double clip_norm = 1.0;         // C
  double noise_multiplier = 1.0;  // sigma; noise std is sigma * C
  double delta = 1e-5;
  double sampling_rate = 0.01;    // q
  long long steps = 0;

  void Validate() const {
    Require(clip_norm > 0.0 && std::isfinite(clip_norm), ErrorKind::kValidation,
            "clip_norm must be positive");
    Require(noise_multiplier >= 0.0 && std::isfinite(noise_multiplier), ErrorKind::kValidation,
            "noise_multiplier must be non-negative");
    Require(delta > 0.0 && delta < 1.0, ErrorKind::kValidation, "delta must lie in (0, 1)");
    Require(sampling_rate > 0.0 && sampling_rate <= 1.0, ErrorKind::kValidation,
            "sampling_rate must lie in (0, 1]");
    Require(steps >= 0, ErrorKind::kValidation, "steps must be non-negative");
  }
};

// Upper bound on epsilon: Gaussian-mechanism tail bound per step with
// delta_0 = delta / (2T), amplification by Poisson subsampling, then advanced
// composition over T steps with slack delta / 2. Looser than a moments
// accountant. Returns +inf when noise is disabled.
inline double DpEpsilon(const DpConfig& dp) {
  dp.Validate();
  if (dp.steps == 0) return 0.0;
  if (dp.noise_multiplier == 0.0) return std::numeric_limits<double>::infinity();
  const double steps = static_cast<double>(dp.steps);
  const double delta_step = dp.delta / (2.0 * steps);
  const double eps0 = std::sqrt(2.0 * std::log(1.25 / delta_step)) / dp.noise_multiplier;
  const double eps_amp = std::log1p(dp.sampling_rate * std::expm1(eps0));
  return std::sqrt(2.0 * steps * std::log(2.0 / dp.delta)) * eps_amp +
         steps * eps_amp * std::expm1(eps_amp);
}

// Each row joins the batch independently with probability q.
inline std::vector<std::size_t> PoissonBatch(std::size_t n, double q, Rng& rng) {
  std::vector<std::size_t> batch;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.Bernoulli(q)) batch.push_back(i);
  }
  return batch;
}

struct ClippedGradients {
  Parameters sum;                    // sum of clipped per-example gradients
  std::vector<double> raw_norms;     // per-example norms before clipping
  std::vector<double> clipped_norms; // per-example norms after clipping
};

// Per-example gradients of the (optionally weighted) cross-entropy, each
// clipped to L2 norm <= clip_norm, then summed. Norms use the outer-product
// identity ||delta a^T||^2 = ||delta||^2 ||a||^2, so per-example gradients are
// never materialized.
inline ClippedGradients ClipAndSum(const MlpModel& model, const Matrix& batch,
                                   std::span<const int> labels, std::span<const double> weights,
                                   double clip_norm) {
  const std::size_t n = static_cast<std::size_t>(batch.rows());
  ClippedGradients out;
  if (n == 0) {
    out.sum = model.params.ZerosLike();
    return out;
  }
  Require(labels.size() == n && (weights.empty() || weights.size() == n), ErrorKind::kShape,
          "labels and weights must match the batch");
  ForwardCache cache;
  const Matrix probs = Softmax(ForwardLogits(model, batch, &cache));
  Matrix d_logits = probs;
  for (std::size_t i = 0; i < n; ++i) {
    d_logits(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
    if (!weights.empty()) d_logits.row(static_cast<Eigen::Index>(i)) *= weights[i];
  }
  const std::vector<Matrix> deltas = BackwardDeltas(model, cache, d_logits);
  Vector sq = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t l = 0; l < deltas.size(); ++l) {
    const Vector d2 = deltas[l].rowwise().squaredNorm();
    const Vector a2 = cache.activations[l].rowwise().squaredNorm();
    sq.array() += d2.array() * (a2.array() + 1.0);
  }
  out.raw_norms.resize(n);
  out.clipped_norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = std::sqrt(sq(static_cast<Eigen::Index>(i)));
    const double factor = norm > clip_norm ? clip_norm / norm : 1.0;
    out.raw_norms[i] = norm;
    out.clipped_norms[i] = norm * factor;
    d_logits.row(static_cast<Eigen::Index>(i)) *= factor;
  }
  // Backprop is linear in d_logits with the ReLU masks fixed, so scaling the
  // rows of d_logits scales each example's gradient.
  out.sum = Backward(model, cache, d_logits);
  return out;
}

// Adds N(0, (sigma C)^2) to every coordinate and divides by the expected batch
// size q n.
inline Parameters NoisedGradient(Parameters clipped_sum, const DpConfig& dp, std::size_t n,
                                 Rng& noise_rng) {
  const double std_dev = dp.noise_multiplier * dp.clip_norm;
  for (auto& w : clipped_sum.weights) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] += std_dev * noise_rng.Normal();
  }
  for (auto& b : clipped_sum.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] += std_dev * noise_rng.Normal();
  }
  clipped_sum.Scale(1.0 / (dp.sampling_rate * static_cast<double>(n)));
  return clipped_sum;
}

struct DpResult {
  MlpModel model;
  double epsilon = 0.0;
  DpConfig accounted;  // sampling rate and step count actually used
};

// Called with the batch indices and clipped norms of every step.
using DpObserver = std::function<void(std::span<const std::size_t>, const ClippedGradients&)>;

// q = batch_size / n; epochs * round(1 / q) steps. Sampling and noise come
// from separate streams derived from train.seed. train.sample_weights, when
// given, scale each example's loss before clipping.
inline DpResult DpSgdTrain(const MlpModel& model_init, const LabeledDataset& data,
                           const TrainConfig& train, DpConfig dp,
                           const DpObserver& observer = nullptr) {
  Require(data.size() > 0, ErrorKind::kValidation, "training data must be nonempty");
  train.Validate(data.size());
  const std::size_t n = data.size();
  dp.sampling_rate = std::min(1.0, static_cast<double>(train.batch_size) / static_cast<double>(n));
  const long long steps_per_epoch =
      std::max<long long>(1, std::llround(1.0 / dp.sampling_rate));
  dp.steps = steps_per_epoch * train.epochs;
  dp.Validate();
  Rng sampling(DeriveSeed(train.seed, "dp-sampling"));
  Rng noise(DeriveSeed(train.seed, "dp-noise"));
  MlpModel model = model_init;
  for (long long step = 0; step < dp.steps; ++step) {
    const std::vector<std::size_t> batch = PoissonBatch(n, dp.sampling_rate, sampling);
    std::vector<double> weights;
    if (!train.sample_weights.empty()) weights = Gather(train.sample_weights, batch);
    ClippedGradients clipped = ClipAndSum(model, GatherRows(data.features, batch),
                                          Gather(data.labels, batch), weights, dp.clip_norm);
    if (observer) observer(batch, clipped);
    const Parameters grads = NoisedGradient(std::move(clipped.sum), dp, n, noise);
    SgdStepInPlace(model, grads, train.learning_rate, train.weight_decay);
  }
  DpResult result{std::move(model), DpEpsilon(dp), dp};
  return result;
}

// ---------------------------------------------------------------------------
// Restriction policies

enum class RestrictionMode { kNone, kLabelOnly, kTruncate, kFairIsolation };

struct RestrictionPolicy {
  RestrictionMode mode = RestrictionMode::kNone;
  int digits = 0;  // truncate only

  void Validate() const {
    Require(mode != RestrictionMode::kTruncate || digits >= 1, ErrorKind::kConfig,
            "truncate restriction needs at least 1 digit");
  }

  // "none", "label_only", "truncate:K", "fair_isolation"
  std::string ToString() const {
    switch (mode) {
      case RestrictionMode::kNone: return "none";
      case RestrictionMode::kLabelOnly: return "label_only";
      case RestrictionMode::kTruncate: return "truncate:" + std::to_string(digits);
      case RestrictionMode::kFairIsolation: return "fair_isolation";
    }
    return "none";
  }

  static RestrictionPolicy Parse(const std::string& text) {
    RestrictionPolicy p;
    if (text == "none") return p;
    if (text == "label_only") {
      p.mode = RestrictionMode::kLabelOnly;
    } else if (text == "fair_isolation") {
      p.mode = RestrictionMode::kFairIsolation;
    } else if (text.rfind("truncate:", 0) == 0) {
      p.mode = RestrictionMode::kTruncate;
      const std::string k = text.substr(9);
      Require(!k.empty() && k.find_first_not_of("0123456789") == std::string::npos && k.size() < 3,
              ErrorKind::kConfig, "truncate digits must be a positive integer: '" + text + "'");
      p.digits = std::stoi(k);
    } else {
      Fail(ErrorKind::kConfig, "unknown restriction policy '" + text + "'");
    }
    p.Validate();
    return p;
  }

  bool operator==(const RestrictionPolicy&) const = default;
};

// Applies a policy to one model's predictions. Logits are dropped by every
// policy that changes the probabilities, since they would undo it.
inline ForwardRecord RestrictPredictions(ForwardRecord record, const RestrictionPolicy& policy) {
  policy.Validate();
  switch (policy.mode) {
    case RestrictionMode::kNone:
      break;
    case RestrictionMode::kLabelOnly:
      for (Eigen::Index i = 0; i < record.probs.rows(); ++i) {
        const bool one = record.probs(i, 1) > record.probs(i, 0);
        record.probs(i, 0) = one ? 0.0 : 1.0;
        record.probs(i, 1) = one ? 1.0 : 0.0;
      }
      record.logits = Matrix();
      record.embedding = Matrix();
      break;
    case RestrictionMode::kTruncate: {
      const double scale = std::pow(10.0, policy.digits);
      for (Eigen::Index i = 0; i < record.probs.rows(); ++i) {
        double total = 0.0;
        for (Eigen::Index k = 0; k < record.probs.cols(); ++k) {
          // nearbyint rounds half to even in the default rounding mode.
          record.probs(i, k) = std::nearbyint(record.probs(i, k) * scale) / scale;
          total += record.probs(i, k);
        }
        record.probs.row(i) /= total;
      }
      record.logits = Matrix();
      record.embedding = Matrix();
      break;
    }
    case RestrictionMode::kFairIsolation:
      record.fair_isolated = true;
      break;
  }
  return record;
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_DEFENSES_H_
