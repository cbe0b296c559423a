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

// Membership and attribute inference attacks: shadow-model score attacks,
// LiRA, black/white-box AIA, and the fairness-discrepancy (FD) variants that
// read a (biased, fair) pair of models at once.

#ifndef FAIRAUDIT_ATTACKS_H_
#define FAIRAUDIT_ATTACKS_H_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <Eigen/Cholesky>

#include "fairaudit/dataset.h"
#include "fairaudit/defenses.h"
#include "fairaudit/error.h"
#include "fairaudit/evalmetrics.h"
#include "fairaudit/fairness.h"
#include "fairaudit/nn.h"
#include "fairaudit/recipe.h"
#include "fairaudit/rng.h"

namespace fairaudit {

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kCovarianceRidge = 1e-6;

// ln(p / (1 - p)) of the true-label probability, clamped to [1e-7, 1 - 1e-7].
inline double LogitScale(double p) {
  Require(p >= 0.0 && p <= 1.0, ErrorKind::kDomain, "probability outside [0, 1]");
  const double c = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return std::log(c) - std::log1p(-c);
}

// ---------------------------------------------------------------------------
// Shadows

struct ShadowEntry {
  std::vector<std::size_t> subset;  // sorted row indices into the pool
  MlpModel biased;
  std::optional<MlpModel> fair;
  uint64_t seed = 0;       // per-shadow seed
  uint64_t init_seed = 0;  // shared by the biased and fair model
};

struct ShadowSet {
  std::vector<ShadowEntry> members;
  std::size_t pool_size = 0;
  bool paired = false;
};

struct ShadowConfig {
  std::size_t k = 64;
  bool paired = false;
  std::vector<int> layer_sizes = {16, 32, 16, 2};
  TrainConfig train;
  std::optional<InterventionConfig> intervention;  // required when paired
  std::optional<DpConfig> dp;                      // mirror a DP-trained target
  uint64_t seed = 0;
  int jobs = 1;
};

namespace internal {

// Runs task(i) for i in [0, count) on up to `jobs` threads. Results are keyed
// by index, so scheduling never changes the outcome; the lowest-index failure
// is rethrown.
template <typename Task>
void ParallelFor(std::size_t count, int jobs, const Task& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace internal

// Each shadow trains on an independent seeded half of the pool. In paired mode
// the fair partner uses the same subset, initialization and shuffle seed.
inline ShadowSet TrainShadows(const LabeledDataset& pool, const ShadowConfig& config) {
  Require(config.k >= 2, ErrorKind::kConfig, "need at least 2 shadow models");
  Require(pool.size() >= 2 * static_cast<std::size_t>(config.train.batch_size),
          ErrorKind::kValidation, "shadow pool smaller than two batches");
  Require(!config.paired || config.intervention.has_value(), ErrorKind::kConfig,
          "paired shadows need a fairness intervention");
  TrainingRecipe recipe;
  recipe.layer_sizes = config.layer_sizes;
  recipe.train = config.train;
  if (config.intervention) recipe.intervention = *config.intervention;
  recipe.dp = config.dp;

  ShadowSet set;
  set.pool_size = pool.size();
  set.paired = config.paired;
  set.members.resize(config.k);
  internal::ParallelFor(config.k, config.jobs, [&](std::size_t j) {
    ShadowEntry& entry = set.members[j];
    entry.seed = DeriveSeed(config.seed, "shadow-" + std::to_string(j));
    entry.init_seed = DeriveSeed(entry.seed, "init");
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(entry.seed, "subset"));
    rng.Shuffle(std::span(order));
    order.resize(pool.size() / 2);
    std::sort(order.begin(), order.end());
    entry.subset = std::move(order);
    const LabeledDataset data = pool.Subset(entry.subset);
    const uint64_t train_seed = DeriveSeed(entry.seed, "train");
    entry.biased = TrainBiasedModel(recipe, data, entry.init_seed, train_seed).model;
    if (config.paired) entry.fair = TrainFairModel(recipe, data, entry.init_seed, train_seed).model;
  });
  return set;
}

// ---------------------------------------------------------------------------
// Attack features

enum class FeatureKind { kScoreSingle, kScorePair, kEmbedSingle, kEmbedPair };

struct AttackFeatureMode {
  FeatureKind kind = FeatureKind::kScoreSingle;
  RestrictionPolicy restriction;

  bool pair() const { return kind == FeatureKind::kScorePair || kind == FeatureKind::kEmbedPair; }
};

namespace internal {

inline void AppendSortedProbs(const Matrix& probs, Matrix& out, Eigen::Index col) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    out(i, col) = std::max(probs(i, 0), probs(i, 1));
    out(i, col + 1) = std::min(probs(i, 0), probs(i, 1));
  }
}

inline const Matrix& RequireEmbedding(const ForwardRecord& record) {
  Require(record.embedding.rows() == record.probs.rows() && record.embedding.cols() > 0,
          ErrorKind::kRestriction, "embeddings are not exposed under the active restriction");
  return record.embedding;
}

}  // namespace internal

// Restriction policies apply to the records first. Under fair isolation the
// biased model is not exposed, so pair modes (and records already marked
// isolated) are refused.
inline Matrix BuildAttackFeatures(const ForwardRecord& records_b, const ForwardRecord* records_f,
                                  const AttackFeatureMode& mode) {
  const bool isolation = mode.restriction.mode == RestrictionMode::kFairIsolation;
  if (mode.pair()) {
    Require(records_f != nullptr, ErrorKind::kConfig, "pair features need the fair model's records");
    Require(!isolation && !records_b.fair_isolated, ErrorKind::kRestriction,
            "fair-model isolation forbids combining biased and fair predictions");
    Require(records_f->size() == records_b.size(), ErrorKind::kShape,
            "biased and fair records differ in length");
  }
  Require(!records_b.fair_isolated, ErrorKind::kRestriction,
          "biased-model predictions are isolated");
  const RestrictionPolicy policy = isolation ? RestrictionPolicy{} : mode.restriction;
  const ForwardRecord b = RestrictPredictions(records_b, policy);
  const Eigen::Index n = static_cast<Eigen::Index>(b.size());
  switch (mode.kind) {
    case FeatureKind::kScoreSingle: {
      Matrix out(n, 2);
      internal::AppendSortedProbs(b.probs, out, 0);
      return out;
    }
    case FeatureKind::kScorePair: {
      const ForwardRecord f = RestrictPredictions(*records_f, policy);
      Matrix out(n, 4);
      internal::AppendSortedProbs(b.probs, out, 0);
      internal::AppendSortedProbs(f.probs, out, 2);
      return out;
    }
    case FeatureKind::kEmbedSingle:
      return internal::RequireEmbedding(b);
    case FeatureKind::kEmbedPair: {
      const ForwardRecord f = RestrictPredictions(*records_f, policy);
      const Matrix& eb = internal::RequireEmbedding(b);
      const Matrix& ef = internal::RequireEmbedding(f);
      Matrix out(n, eb.cols() + ef.cols());
      out << eb, ef;
      return out;
    }
  }
  Fail(ErrorKind::kConfig, "unhandled feature mode");
}

// ---------------------------------------------------------------------------
// Attack classifier

struct AttackTrainConfig {
  std::vector<int> hidden = {16};
  int epochs = 20;
  int batch_size = 128;
  double learning_rate = 0.05;
};

// Trains [width, 16, 2] with balanced class weights on standardized features;
// the standardization is folded into the first layer, so the result consumes
// raw features.
inline MlpModel TrainAttackModel(const Matrix& features, std::span<const int> targets,
                                 uint64_t seed, const AttackTrainConfig& config = {}) {
  const std::size_t n = targets.size();
  Require(static_cast<std::size_t>(features.rows()) == n && n > 0, ErrorKind::kShape,
          "attack features and targets differ in length");
  const auto [pos, neg] = internal::ClassCounts(targets);
  Require(neg > 0 && pos > 0, ErrorKind::kValidation, "attack targets must contain both classes");

  const Vector mean = features.colwise().mean().transpose();
  Vector scale(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - mean(j)).square().mean();
    scale(j) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  LabeledDataset data;
  data.features = (features.rowwise() - mean.transpose()).array().rowwise() * scale.transpose().array();
  data.labels.assign(targets.begin(), targets.end());
  data.groups.assign(n, 0);
  data.membership.assign(n, Membership::kUnassigned);
  data.ids.resize(n);
  std::iota(data.ids.begin(), data.ids.end(), 0);

  std::vector<int> sizes = {static_cast<int>(features.cols())};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(2);
  TrainConfig train;
  train.epochs = config.epochs;
  train.batch_size = config.batch_size;
  train.learning_rate = config.learning_rate;
  train.seed = DeriveSeed(seed, "attack-train");
  train.sample_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    train.sample_weights[i] = static_cast<double>(n) / (2.0 * static_cast<double>(targets[i] ? pos : neg));
  }
  MlpModel model = Train(InitMlp(sizes, DeriveSeed(seed, "attack-init")), data, train);
  Matrix& w0 = model.params.weights[0];
  model.params.biases[0] -= w0 * scale.cwiseProduct(mean);
  w0 = w0.array().rowwise() * scale.transpose().array();
  return model;
}

// Class-1 (member, or s = 1) probability per row.
inline std::vector<double> AttackScore(const MlpModel& attack_model, const Matrix& features) {
  const Matrix probs = Softmax(ForwardLogits(attack_model, features));
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[static_cast<std::size_t>(i)] = probs(i, 1);
  return out;
}

// ---------------------------------------------------------------------------
// LiRA

struct GaussianFit {
  int dim = 1;
  Vector mu_in, mu_out;
  Matrix cov_in, cov_out;  // 1x1 for dim 1
  std::size_t counts_in = 0, counts_out = 0;
  bool pooled_in = false, pooled_out = false;
};

// Shadow observations of one example: rows are phi vectors (dim columns).
struct ExampleObservations {
  Matrix in;
  Matrix out;
};

namespace internal {

struct Moments {
  Vector mean;
  Matrix cov;
};

// Sample mean and (n - 1)-normalized covariance; variance floor in 1-D, ridge
// in 2-D.
inline Moments SampleMoments(const Matrix& obs) {
  Moments m;
  m.mean = obs.colwise().mean().transpose();
  const Matrix centered = obs.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / static_cast<double>(obs.rows() - 1);
  if (obs.cols() == 1) {
    m.cov(0, 0) = std::max(m.cov(0, 0), kVarianceFloor);
  } else {
    m.cov += kCovarianceRidge * Matrix::Identity(obs.cols(), obs.cols());
  }
  return m;
}

inline Matrix StackRows(const std::vector<ExampleObservations>& obs, bool in, int dim) {
  Eigen::Index rows = 0;
  for (const auto& o : obs) rows += (in ? o.in : o.out).rows();
  Matrix all(rows, dim);
  Eigen::Index r = 0;
  for (const auto& o : obs) {
    const Matrix& m = in ? o.in : o.out;
    if (m.rows() == 0) continue;
    all.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  return all;
}

inline double LogDensity(const Vector& x, const Vector& mu, const Matrix& cov) {
  const Eigen::Index d = x.size();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Require(llt.info() == Eigen::Success, ErrorKind::kNumerical,
          "covariance is not positive definite");
  const Eigen::VectorXd diff = (x - mu);
  const Eigen::VectorXd z = llt.matrixL().solve(diff);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det +
                 z.squaredNorm());
}

}  // namespace internal

// Per-example Gaussian fits of the IN and OUT shadow observations. An example
// with fewer than 2 observations of a tag uses the pooled statistics of all
// observations of that tag.
inline std::vector<GaussianFit> LiraFit(const std::vector<ExampleObservations>& observations,
                                        int dim) {
  Require(dim == 1 || dim == 2, ErrorKind::kValidation, "LiRA fits are 1-D or 2-D");
  for (const auto& o : observations) {
    Require((o.in.rows() == 0 || o.in.cols() == dim) && (o.out.rows() == 0 || o.out.cols() == dim),
            ErrorKind::kShape, "observation width does not match the fit dimension");
  }
  const Matrix all_in = internal::StackRows(observations, true, dim);
  const Matrix all_out = internal::StackRows(observations, false, dim);
  Require(all_out.rows() > 0, ErrorKind::kEstimation, "no OUT observations to fit");
  std::optional<internal::Moments> global_in, global_out;
  if (all_out.rows() >= 2) global_out = internal::SampleMoments(all_out);
  if (all_in.rows() >= 2) global_in = internal::SampleMoments(all_in);

  std::vector<GaussianFit> fits(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    GaussianFit& fit = fits[i];
    fit.dim = dim;
    fit.counts_in = static_cast<std::size_t>(o.in.rows());
    fit.counts_out = static_cast<std::size_t>(o.out.rows());
    auto pick = [](const Matrix& obs, const std::optional<internal::Moments>& global,
                   const char* tag, bool& pooled) {
      if (obs.rows() >= 2) return internal::SampleMoments(obs);
      Require(global.has_value(), ErrorKind::kEstimation,
              std::string("too few ") + tag + " observations for a pooled fit");
      pooled = true;
      return *global;
    };
    internal::Moments in = pick(o.in, global_in, "IN", fit.pooled_in);
    internal::Moments out = pick(o.out, global_out, "OUT", fit.pooled_out);
    fit.mu_in = std::move(in.mean);
    fit.cov_in = std::move(in.cov);
    fit.mu_out = std::move(out.mean);
    fit.cov_out = std::move(out.cov);
  }
  return fits;
}

struct LiraScoreResult {
  double log_lambda = 0.0;
  double lambda = 1.0;
  double membership_score = 0.5;  // lambda / (1 + lambda)
};

inline LiraScoreResult LiraScore(std::span<const double> target_phi, const GaussianFit& fit) {
  Require(target_phi.size() == static_cast<std::size_t>(fit.dim), ErrorKind::kShape,
          "target phi dimension does not match the fit");
  Vector x(fit.dim);
  for (int j = 0; j < fit.dim; ++j) x(j) = target_phi[static_cast<std::size_t>(j)];
  LiraScoreResult r;
  r.log_lambda = internal::LogDensity(x, fit.mu_in, fit.cov_in) -
                 internal::LogDensity(x, fit.mu_out, fit.cov_out);
  r.lambda = std::exp(r.log_lambda);
  r.membership_score = r.log_lambda >= 0.0 ? 1.0 / (1.0 + std::exp(-r.log_lambda))
                                           : std::exp(r.log_lambda) / (1.0 + std::exp(r.log_lambda));
  return r;
}

// ---------------------------------------------------------------------------
// Attack orchestration

enum class AttackKind { kMiaScore, kMiaLira, kAiaBlack, kAiaWhite };

struct AttackSpec {
  AttackKind kind = AttackKind::kMiaScore;
  bool fd = false;

  bool is_mia() const { return kind == AttackKind::kMiaScore || kind == AttackKind::kMiaLira; }
  bool operator==(const AttackSpec&) const = default;
};

inline std::string AttackName(const AttackSpec& spec) {
  std::string base;
  switch (spec.kind) {
    case AttackKind::kMiaScore: base = "mia_score"; break;
    case AttackKind::kMiaLira: base = "mia_lira"; break;
    case AttackKind::kAiaBlack: base = "aia_black"; break;
    case AttackKind::kAiaWhite: base = "aia_white"; break;
  }
  return spec.fd ? "fd_" + base : base;
}

inline AttackSpec ParseAttackName(const std::string& name) {
  for (bool fd : {false, true}) {
    for (auto kind : {AttackKind::kMiaScore, AttackKind::kMiaLira, AttackKind::kAiaBlack,
                      AttackKind::kAiaWhite}) {
      if (AttackName({kind, fd}) == name) return {kind, fd};
    }
  }
  Fail(ErrorKind::kConfig, "unknown attack kind '" + name + "'");
}

inline std::vector<AttackSpec> AllAttackSpecs() {
  std::vector<AttackSpec> out;
  for (bool fd : {false, true}) {
    for (auto kind : {AttackKind::kMiaScore, AttackKind::kMiaLira, AttackKind::kAiaBlack,
                      AttackKind::kAiaWhite}) {
      out.push_back({kind, fd});
    }
  }
  return out;
}

// Which deployment an attack reads: one of the two targets, or both (FD).
enum class TargetRole { kBiased, kFair, kPair };

inline std::string TargetRoleName(TargetRole role) {
  switch (role) {
    case TargetRole::kBiased: return "biased";
    case TargetRole::kFair: return "fair";
    case TargetRole::kPair: return "pair";
  }
  return "?";
}

struct AttackSettings {
  std::size_t attack_shadows = 8;  // shadows whose records train the attack classifier
  AttackTrainConfig attack_train;
  RestrictionPolicy restriction;
  uint64_t seed = 0;
};

struct AttackContext {
  const MlpModel* target_b = nullptr;
  const MlpModel* target_f = nullptr;
  const LabeledDataset* eval = nullptr;  // member and non-member rows
  const LabeledDataset* pool = nullptr;  // attacker's auxiliary rows
  const ShadowSet* shadows = nullptr;    // trained on demand from shadow_config when null
  ShadowConfig shadow_config;
  AttackSettings settings;
};

struct AttackResult {
  std::vector<double> scores;
  std::vector<int> truth;
  std::vector<uint64_t> ids;
  std::size_t feature_width = 0;
  // AUC of the raw top probability (naive score attack only), NaN otherwise.
  double raw_auc = std::numeric_limits<double>::quiet_NaN();
};

namespace internal {

// Predictions exposed by one deployment. Under fair isolation the biased
// model's records are marked unusable.
inline ForwardRecord Observe(const MlpModel& model, const Matrix& x, const RestrictionPolicy& policy,
                             bool biased_model) {
  ForwardRecord record = Forward(model, x);
  if (policy.mode == RestrictionMode::kFairIsolation) {
    record.fair_isolated = biased_model;
    return record;
  }
  return RestrictPredictions(std::move(record), policy);
}

inline std::vector<double> TruePhi(const ForwardRecord& record, std::span<const int> labels) {
  Require(!record.fair_isolated, ErrorKind::kRestriction, "biased-model predictions are isolated");
  std::vector<double> phi(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    phi[i] = LogitScale(record.probs(static_cast<Eigen::Index>(i), labels[i]));
  }
  return phi;
}

// Group-balanced subsample: the larger group is cut down to the size of the
// smaller one, so an uninformative attack scores 0.5.
inline std::vector<std::size_t> GroupBalancedRows(const LabeledDataset& data, uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> rows = {data.RowsWhere(-1, 0), data.RowsWhere(-1, 1)};
  Require(!rows[0].empty() && !rows[1].empty(), ErrorKind::kValidation,
          "attribute inference needs both groups in the evaluation rows");
  const int big = rows[0].size() >= rows[1].size() ? 0 : 1;
  Rng rng(seed);
  rng.Shuffle(std::span(rows[big]));
  rows[big].resize(rows[1 - big].size());
  std::vector<std::size_t> out = rows[0];
  out.insert(out.end(), rows[1].begin(), rows[1].end());
  std::sort(out.begin(), out.end());
  return out;
}

inline void CheckShadowHygiene(const ShadowSet& shadows, const LabeledDataset& pool,
                               const LabeledDataset& eval) {
  Require(shadows.pool_size == pool.size(), ErrorKind::kValidation,
          "shadow set was trained on a different pool");
  std::unordered_set<uint64_t> eval_ids(eval.ids.begin(), eval.ids.end());
  for (const auto& entry : shadows.members) {
    for (std::size_t r : entry.subset) {
      Require(eval_ids.count(pool.ids[r]) == 0, ErrorKind::kValidation,
              "evaluation row " + std::to_string(pool.ids[r]) + " appears in a shadow subset");
    }
  }
}

}  // namespace internal

inline AttackResult RunAttack(const AttackSpec& spec, TargetRole role, const AttackContext& ctx) {
  Require(ctx.eval != nullptr && ctx.pool != nullptr && ctx.target_b != nullptr,
          ErrorKind::kConfig, "attack needs evaluation rows, a pool and a target");
  Require(spec.fd == (role == TargetRole::kPair), ErrorKind::kConfig,
          "FD attacks read the (biased, fair) pair; naive attacks read one target");
  Require(!(spec.fd || role == TargetRole::kFair) || ctx.target_f != nullptr, ErrorKind::kConfig,
          AttackName(spec) + " needs the fair model");
  const bool use_fair = role == TargetRole::kFair;
  const RestrictionPolicy& policy = ctx.settings.restriction;
  if (spec.fd) {
    Require(policy.mode != RestrictionMode::kFairIsolation, ErrorKind::kRestriction,
            "fair-model isolation forbids FD attacks");
  }
  const uint64_t seed = DeriveSeed(ctx.settings.seed, AttackName(spec) + "/" + TargetRoleName(role));
  const LabeledDataset& pool = *ctx.pool;
  AttackResult result;

  // Single-model records for the target deployment(s).
  auto target_records = [&](const Matrix& x) {
    std::pair<ForwardRecord, std::optional<ForwardRecord>> r;
    if (use_fair) {
      r.first = internal::Observe(*ctx.target_f, x, policy, false);
    } else {
      r.first = internal::Observe(*ctx.target_b, x, policy, true);
      if (spec.fd) r.second = internal::Observe(*ctx.target_f, x, policy, false);
    }
    return r;
  };

  if (!spec.is_mia()) {
    // Attribute inference: the attack classifier learns s from the target's
    // outputs on auxiliary rows with known s.
    const AttackFeatureMode mode{
        spec.kind == AttackKind::kAiaBlack
            ? (spec.fd ? FeatureKind::kScorePair : FeatureKind::kScoreSingle)
            : (spec.fd ? FeatureKind::kEmbedPair : FeatureKind::kEmbedSingle),
        policy};
    const auto aux = target_records(pool.features);
    const Matrix train_x =
        BuildAttackFeatures(aux.first, aux.second ? &*aux.second : nullptr, mode);
    const MlpModel attack = TrainAttackModel(train_x, pool.groups, seed, ctx.settings.attack_train);
    const std::vector<std::size_t> rows =
        internal::GroupBalancedRows(*ctx.eval, DeriveSeed(seed, "aia-balance"));
    const LabeledDataset eval = ctx.eval->Subset(rows);
    const auto rec = target_records(eval.features);
    const Matrix eval_x = BuildAttackFeatures(rec.first, rec.second ? &*rec.second : nullptr, mode);
    result.scores = AttackScore(attack, eval_x);
    result.truth = eval.groups;
    result.ids = eval.ids;
    result.feature_width = static_cast<std::size_t>(eval_x.cols());
    return result;
  }

  std::optional<ShadowSet> trained;
  const ShadowSet* shadows = ctx.shadows;
  if (shadows == nullptr) {
    ShadowConfig sc = ctx.shadow_config;
    sc.paired = sc.paired || spec.fd || use_fair;
    trained = TrainShadows(pool, sc);
    shadows = &*trained;
  }
  Require(!(spec.fd || use_fair) || shadows->paired, ErrorKind::kConfig,
          "attacks on the fair model need paired shadows");
  internal::CheckShadowHygiene(*shadows, pool, *ctx.eval);
  const LabeledDataset& eval = *ctx.eval;
  result.ids = eval.ids;
  result.truth.resize(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    Require(eval.membership[i] != Membership::kUnassigned, ErrorKind::kValidation,
            "membership attacks need member/non-member flags on every evaluation row");
    result.truth[i] = eval.membership[i] == Membership::kMember ? 1 : 0;
  }
  // Shadow records mimic the target's interface, including its restriction.
  auto shadow_records = [&](const ShadowEntry& entry, const Matrix& x) {
    std::pair<ForwardRecord, std::optional<ForwardRecord>> r;
    const RestrictionPolicy shadow_policy =
        policy.mode == RestrictionMode::kFairIsolation ? RestrictionPolicy{} : policy;
    if (use_fair) {
      r.first = internal::Observe(*entry.fair, x, shadow_policy, false);
    } else {
      r.first = internal::Observe(entry.biased, x, shadow_policy, false);
      if (spec.fd) r.second = internal::Observe(*entry.fair, x, shadow_policy, false);
    }
    return r;
  };

  if (spec.kind == AttackKind::kMiaScore) {
    const AttackFeatureMode mode{spec.fd ? FeatureKind::kScorePair : FeatureKind::kScoreSingle,
                                 policy};
    const std::size_t m = std::min(ctx.settings.attack_shadows, shadows->members.size());
    Require(m >= 1, ErrorKind::kConfig, "attack_shadows must be at least 1");
    std::vector<Matrix> blocks;
    std::vector<int> targets;
    for (std::size_t j = 0; j < m; ++j) {
      const ShadowEntry& entry = shadows->members[j];
      const auto rec = shadow_records(entry, pool.features);
      blocks.push_back(BuildAttackFeatures(rec.first, rec.second ? &*rec.second : nullptr,
                                           {mode.kind, RestrictionPolicy{}}));
      std::vector<int> in(pool.size(), 0);
      for (std::size_t r : entry.subset) in[r] = 1;
      targets.insert(targets.end(), in.begin(), in.end());
    }
    Matrix train_x(static_cast<Eigen::Index>(targets.size()), blocks.front().cols());
    Eigen::Index row = 0;
    for (const auto& b : blocks) {
      train_x.middleRows(row, b.rows()) = b;
      row += b.rows();
    }
    const MlpModel attack = TrainAttackModel(train_x, targets, seed, ctx.settings.attack_train);
    const auto rec = target_records(eval.features);
    const Matrix eval_x = BuildAttackFeatures(rec.first, rec.second ? &*rec.second : nullptr, mode);
    result.scores = AttackScore(attack, eval_x);
    result.feature_width = static_cast<std::size_t>(eval_x.cols());
    if (!spec.fd) {
      std::vector<double> top(eval.size());
      for (std::size_t i = 0; i < eval.size(); ++i) top[i] = eval_x(static_cast<Eigen::Index>(i), 0);
      result.raw_auc = Auc(top, result.truth);
    }
    return result;
  }

  // LiRA. Pool rows carry IN and OUT observations; evaluation rows are OUT for
  // every shadow, so their IN fit falls back to the pooled IN statistics.
  const int dim = spec.fd ? 2 : 1;
  const std::size_t n_pool = pool.size();
  std::vector<ExampleObservations> obs(n_pool + eval.size());
  std::vector<std::vector<std::array<double, 2>>> in_rows(n_pool), out_rows(obs.size());
  for (const ShadowEntry& entry : shadows->members) {
    std::vector<char> in(n_pool, 0);
    for (std::size_t r : entry.subset) in[r] = 1;
    const auto pool_rec = shadow_records(entry, pool.features);
    const auto eval_rec = shadow_records(entry, eval.features);
    const std::vector<double> pb = internal::TruePhi(pool_rec.first, pool.labels);
    const std::vector<double> eb = internal::TruePhi(eval_rec.first, eval.labels);
    std::vector<double> pf, ef;
    if (spec.fd) {
      pf = internal::TruePhi(*pool_rec.second, pool.labels);
      ef = internal::TruePhi(*eval_rec.second, eval.labels);
    }
    for (std::size_t r = 0; r < n_pool; ++r) {
      const std::array<double, 2> phi = {pb[r], spec.fd ? pf[r] : 0.0};
      (in[r] ? in_rows[r] : out_rows[r]).push_back(phi);
    }
    for (std::size_t r = 0; r < eval.size(); ++r) {
      out_rows[n_pool + r].push_back({eb[r], spec.fd ? ef[r] : 0.0});
    }
  }
  auto to_matrix = [dim](const std::vector<std::array<double, 2>>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][j];
    }
    return m;
  };
  for (std::size_t r = 0; r < obs.size(); ++r) {
    if (r < n_pool) obs[r].in = to_matrix(in_rows[r]);
    obs[r].out = to_matrix(out_rows[r]);
  }
  const std::vector<GaussianFit> fits = LiraFit(obs, dim);
  const auto rec = target_records(eval.features);
  const std::vector<double> tb = internal::TruePhi(rec.first, eval.labels);
  std::vector<double> tf;
  if (spec.fd) tf = internal::TruePhi(*rec.second, eval.labels);
  result.scores.resize(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const std::array<double, 2> phi = {tb[i], spec.fd ? tf[i] : 0.0};
    result.scores[i] =
        LiraScore(std::span(phi.data(), static_cast<std::size_t>(dim)), fits[n_pool + i])
            .membership_score;
  }
  result.feature_width = static_cast<std::size_t>(dim);
  return result;
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_ATTACKS_H_
