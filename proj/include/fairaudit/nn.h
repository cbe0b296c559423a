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

// Feed-forward binary classifier with exact backpropagation.
//
// Layer l maps activations A_l (rows = examples) to Z_l = A_l W_l^T + b_l.
// Hidden layers apply ReLU, the last layer is linear and produces two logits.
// The feature extractor h is every layer up to the penultimate activation;
// the head g is the final linear layer, so logits = g(h(x)).

#ifndef FAIRAUDIT_NN_H_
#define FAIRAUDIT_NN_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/dataset.h"
#include "fairaudit/error.h"
#include "fairaudit/linalg.h"
#include "fairaudit/rng.h"

namespace fairaudit {

// Weights and biases of every layer. Also used as the gradient container.
struct Parameters {
  std::vector<Matrix> weights;  // layer l: out_l x in_l
  std::vector<Vector> biases;   // layer l: out_l

  std::size_t Count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    }
    return count;
  }

  Parameters ZerosLike() const {
    Parameters out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.weights.push_back(Matrix::Zero(weights[l].rows(), weights[l].cols()));
      out.biases.push_back(Vector::Zero(biases[l].size()));
    }
    return out;
  }

  bool SameShape(const Parameters& other) const {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) {
      return false;
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != other.weights[l].rows() ||
          weights[l].cols() != other.weights[l].cols() ||
          biases[l].size() != other.biases[l].size()) {
        return false;
      }
    }
    return true;
  }

  // this += scale * other
  void Axpy(double scale, const Parameters& other) {
    Require(SameShape(other), ErrorKind::kShape, "parameter shapes differ");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l].noalias() += scale * other.weights[l];
      biases[l].noalias() += scale * other.biases[l];
    }
  }

  void Scale(double factor) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] *= factor;
      biases[l] *= factor;
    }
  }

  double SquaredNorm() const {
    double total = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      total += weights[l].squaredNorm() + biases[l].squaredNorm();
    }
    return total;
  }

  // Row-major layer order: W_0, b_0, W_1, b_1, ...
  std::vector<double> Flatten() const {
    std::vector<double> flat;
    flat.reserve(Count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
      flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
      flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
    return flat;
  }

  void Unflatten(std::span<const double> flat) {
    Require(flat.size() == Count(), ErrorKind::kShape, "flat parameter length mismatch");
    std::size_t at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), weights[l].size(),
                  weights[l].data());
      at += static_cast<std::size_t>(weights[l].size());
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), biases[l].size(),
                  biases[l].data());
      at += static_cast<std::size_t>(biases[l].size());
    }
  }

  bool operator==(const Parameters& other) const {
    if (!SameShape(other)) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    }
    return true;
  }
};

struct MlpModel {
  std::vector<int> layer_sizes;  // [d, h_1, ..., h_k, 2]
  Parameters params;
  uint64_t seed = 0;  // initialization seed, kept for provenance

  std::size_t num_layers() const { return params.weights.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(layer_sizes.front()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(layer_sizes.back()); }
  std::size_t embedding_dim() const {
    return static_cast<std::size_t>(layer_sizes[layer_sizes.size() - 2]);
  }
  std::size_t ParameterCount() const { return params.Count(); }

  bool operator==(const MlpModel& other) const {
    return layer_sizes == other.layer_sizes && params == other.params && seed == other.seed;
  }
};

namespace internal {

inline void ValidateLayerSizes(const std::vector<int>& layer_sizes, int output_width) {
  Require(layer_sizes.size() >= 2, ErrorKind::kShape,
          "an MLP needs at least input and output layer sizes");
  for (int size : layer_sizes) {
    Require(size > 0, ErrorKind::kShape, "layer sizes must be positive");
  }
  Require(output_width < 0 || layer_sizes.back() == output_width, ErrorKind::kShape,
          "last layer must have width " + std::to_string(output_width));
}

}  // namespace internal

// Glorot-uniform weights, zero biases. The output width must be 2.
inline MlpModel InitMlp(const std::vector<int>& layer_sizes, uint64_t seed) {
  internal::ValidateLayerSizes(layer_sizes, 2);
  MlpModel model;
  model.layer_sizes = layer_sizes;
  model.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-limit, limit);
    model.params.weights.push_back(std::move(w));
    model.params.biases.push_back(Vector::Zero(fan_out));
  }
  return model;
}

// Intermediate values kept for the backward pass. activations[l] is the input
// to layer l; activations.back() is the embedding h(x).
struct ForwardCache {
  std::vector<Matrix> activations;
  Matrix logits;
};

struct ForwardRecord {
  Matrix logits;     // n x 2
  Matrix probs;      // n x 2, rows sum to 1
  Matrix embedding;  // n x embedding_dim; empty once a restriction removes it
  // Set by the fair-isolation restriction: features of the biased model must
  // not be combined with this record.
  bool fair_isolated = false;

  std::size_t size() const { return static_cast<std::size_t>(probs.rows()); }
  bool has_embedding() const { return embedding.rows() > 0 || probs.rows() == 0; }
};

inline Matrix Softmax(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      probs(i, k) = std::exp(logits(i, k) - shift);
      total += probs(i, k);
    }
    probs.row(i) /= total;
  }
  return probs;
}

inline Matrix ForwardLogits(const MlpModel& model, const Matrix& features,
                            ForwardCache* cache = nullptr) {
  Require(static_cast<std::size_t>(features.cols()) == model.input_dim(), ErrorKind::kShape,
          "feature width " + std::to_string(features.cols()) + " does not match model input " +
              std::to_string(model.input_dim()));
  const std::size_t layers = model.num_layers();
  if (cache != nullptr) {
    cache->activations.clear();
    cache->activations.reserve(layers);
    cache->activations.push_back(features);
  }
  Matrix current = features;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = current * model.params.weights[l].transpose();
    z.rowwise() += model.params.biases[l].transpose();
    if (l + 1 < layers) {
      z = z.cwiseMax(0.0);
      if (cache != nullptr) cache->activations.push_back(z);
    }
    current = std::move(z);
  }
  if (cache != nullptr) cache->logits = current;
  return current;
}

inline ForwardRecord Forward(const MlpModel& model, const Matrix& features) {
  ForwardCache cache;
  ForwardRecord record;
  record.logits = ForwardLogits(model, features, &cache);
  record.probs = Softmax(record.logits);
  record.embedding = std::move(cache.activations.back());
  return record;
}

// Per-layer error signals dL/dZ_l for a given dL/dlogits. extra_embedding_grad,
// when non-null, is added to dL/dh(x) below the head, so the head only sees
// d_logits while the extractor sees both.
inline std::vector<Matrix> BackwardDeltas(const MlpModel& model, const ForwardCache& cache,
                                          const Matrix& d_logits,
                                          const Matrix* extra_embedding_grad = nullptr) {
  const std::size_t layers = model.num_layers();
  std::vector<Matrix> deltas(layers);
  deltas[layers - 1] = d_logits;
  for (std::size_t l = layers - 1; l > 0; --l) {
    Matrix d_act = deltas[l] * model.params.weights[l];
    if (l == layers - 1 && extra_embedding_grad != nullptr) d_act += *extra_embedding_grad;
    d_act.array() *= (cache.activations[l].array() > 0.0).cast<double>();
    deltas[l - 1] = std::move(d_act);
  }
  return deltas;
}

inline Parameters GradsFromDeltas(const ForwardCache& cache, const std::vector<Matrix>& deltas) {
  Parameters grads;
  for (std::size_t l = 0; l < deltas.size(); ++l) {
    grads.weights.push_back(deltas[l].transpose() * cache.activations[l]);
    grads.biases.push_back(deltas[l].colwise().sum().transpose());
  }
  return grads;
}

inline Parameters Backward(const MlpModel& model, const ForwardCache& cache,
                           const Matrix& d_logits,
                           const Matrix* extra_embedding_grad = nullptr) {
  return GradsFromDeltas(cache, BackwardDeltas(model, cache, d_logits, extra_embedding_grad));
}

// Gradient of the embedding-level loss back through the extractor only: the
// head receives zero gradient.
inline Parameters BackwardFromEmbedding(const MlpModel& model, const ForwardCache& cache,
                                        const Matrix& d_embedding) {
  const Matrix zero_logits = Matrix::Zero(cache.logits.rows(), cache.logits.cols());
  return Backward(model, cache, zero_logits, &d_embedding);
}

struct LossAndGradient {
  double loss = 0.0;
  Parameters grads;
};

namespace internal {

// Weighted mean cross-entropy and its gradient with respect to the logits.
inline double CrossEntropy(const Matrix& logits, std::span<const int> labels,
                           std::span<const double> weights, Matrix* d_logits) {
  const auto n = static_cast<std::size_t>(logits.rows());
  double total_weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    Require(w >= 0.0 && std::isfinite(w), ErrorKind::kValidation,
            "sample weights must be non-negative");
    total_weight += w;
  }
  Require(total_weight > 0.0, ErrorKind::kValidation, "sample weights sum to zero");
  if (d_logits != nullptr) d_logits->resize(logits.rows(), logits.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double w = (weights.empty() ? 1.0 : weights[i]) / total_weight;
    const double shift = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) sum += std::exp(logits(r, k) - shift);
    const double log_norm = shift + std::log(sum);
    loss += w * (log_norm - logits(r, labels[i]));
    if (d_logits != nullptr) {
      for (Eigen::Index k = 0; k < logits.cols(); ++k) {
        const double p = std::exp(logits(r, k) - log_norm);
        (*d_logits)(r, k) = w * (p - (k == labels[i] ? 1.0 : 0.0));
      }
    }
  }
  return loss;
}

}  // namespace internal

// Weighted mean cross-entropy over the batch (weights normalized by their sum)
// and its exact gradient. Empty weights means all ones.
inline LossAndGradient LossAndGrads(const MlpModel& model, const Matrix& batch,
                                    std::span<const int> labels,
                                    std::span<const double> sample_weights = {}) {
  Require(batch.rows() > 0, ErrorKind::kValidation, "batch must be nonempty");
  Require(static_cast<std::size_t>(batch.rows()) == labels.size(), ErrorKind::kShape,
          "batch and labels differ in length");
  Require(sample_weights.empty() || sample_weights.size() == labels.size(), ErrorKind::kShape,
          "sample weights and labels differ in length");
  ForwardCache cache;
  const Matrix logits = ForwardLogits(model, batch, &cache);
  Matrix d_logits;
  LossAndGradient out;
  out.loss = internal::CrossEntropy(logits, labels, sample_weights, &d_logits);
  out.grads = Backward(model, cache, d_logits);
  return out;
}

// w' = w - lr * (g + weight_decay * w), for every weight and bias.
inline void SgdStepInPlace(MlpModel& model, const Parameters& grads, double learning_rate,
                           double weight_decay) {
  Require(model.params.SameShape(grads), ErrorKind::kShape,
          "gradient shape does not match the model");
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (weight_decay != 0.0) {
      model.params.weights[l] *= (1.0 - learning_rate * weight_decay);
      model.params.biases[l] *= (1.0 - learning_rate * weight_decay);
    }
    model.params.weights[l].noalias() -= learning_rate * grads.weights[l];
    model.params.biases[l].noalias() -= learning_rate * grads.biases[l];
  }
}

inline MlpModel SgdStep(const MlpModel& model, const Parameters& grads, double learning_rate,
                        double weight_decay) {
  MlpModel out = model;
  SgdStepInPlace(out, grads, learning_rate, weight_decay);
  return out;
}

struct TrainConfig {
  int epochs = 0;
  int batch_size = 64;
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  uint64_t seed = 0;
  std::vector<double> sample_weights;  // empty, or one weight per row

  void Validate(std::size_t n) const {
    Require(epochs >= 0, ErrorKind::kValidation, "epochs must be non-negative");
    Require(batch_size > 0, ErrorKind::kValidation, "batch_size must be positive");
    Require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kValidation,
            "learning_rate must be positive");
    Require(weight_decay >= 0.0, ErrorKind::kValidation, "weight_decay must be non-negative");
    Require(sample_weights.empty() || sample_weights.size() == n, ErrorKind::kValidation,
            "sample_weights must have one entry per row");
  }
};

inline Matrix GatherRows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

template <typename T>
std::vector<T> Gather(const std::vector<T>& source, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(source[r]);
  return out;
}

// Computes the loss on one minibatch (row indices into the training set) and
// writes its gradient.
using BatchObjective = std::function<double(const MlpModel& model,
                                            std::span<const std::size_t> batch,
                                            Parameters& grads)>;

// Supplies the row indices of each minibatch of one epoch.
using BatchPlanner = std::function<std::vector<std::vector<std::size_t>>(Rng& rng)>;

inline BatchPlanner ShuffledBatches(std::size_t n, int batch_size) {
  return [n, batch_size](Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(std::span(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  };
}

// Generic minibatch SGD: epochs x (planned batches) steps, shuffle stream
// seeded by config.seed.
inline MlpModel TrainWith(MlpModel model, const TrainConfig& config, const BatchPlanner& plan,
                          const BatchObjective& objective) {
  Rng rng(config.seed);
  Parameters grads = model.params.ZerosLike();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch : plan(rng)) {
      objective(model, batch, grads);
      SgdStepInPlace(model, grads, config.learning_rate, config.weight_decay);
    }
  }
  return model;
}

// Plain weighted cross-entropy training; the per-row weights in
// config.sample_weights (if any) apply.
inline MlpModel Train(const MlpModel& model_init, const LabeledDataset& data,
                      const TrainConfig& config) {
  Require(data.size() > 0, ErrorKind::kValidation, "training data must be nonempty");
  config.Validate(data.size());
  const BatchObjective objective = [&](const MlpModel& model, std::span<const std::size_t> batch,
                                       Parameters& grads) {
    const Matrix x = GatherRows(data.features, batch);
    const std::vector<int> y = Gather(data.labels, batch);
    std::vector<double> w;
    if (!config.sample_weights.empty()) w = Gather(config.sample_weights, batch);
    LossAndGradient lg = LossAndGrads(model, x, y, w);
    grads = std::move(lg.grads);
    return lg.loss;
  };
  return TrainWith(model_init, config, ShuffledBatches(data.size(), config.batch_size),
                   objective);
}

inline double MeanLoss(const MlpModel& model, const LabeledDataset& data) {
  return LossAndGrads(model, data.features, data.labels).loss;
}

inline std::vector<int> PredictLabels(const ForwardRecord& record) {
  std::vector<int> out(record.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[i] = record.probs(r, 1) > record.probs(r, 0) ? 1 : 0;
  }
  return out;
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_NN_H_
