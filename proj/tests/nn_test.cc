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

#include "fairaudit/nn.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace fairaudit {
namespace {

using testing::KindOf;
using testing::RandomMatrix;

// Central finite differences of f over every flattened parameter of model.
std::vector<double> NumericGradient(const MlpModel& model,
                                    const std::function<double(const MlpModel&)>& f,
                                    double h = 1e-6) {
  std::vector<double> flat = model.params.Flatten();
  std::vector<double> out(flat.size());
  MlpModel probe = model;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + h;
    probe.params.Unflatten(flat);
    const double up = f(probe);
    flat[k] = saved - h;
    probe.params.Unflatten(flat);
    const double down = f(probe);
    flat[k] = saved;
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

void ExpectGradientsClose(const std::vector<double>& analytic, const std::vector<double>& numeric,
                          double rel) {
  ASSERT_EQ(analytic.size(), numeric.size());
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-6});
    EXPECT_LE(std::abs(analytic[k] - numeric[k]) / scale, rel)
        << "parameter " << k << ": analytic " << analytic[k] << " numeric " << numeric[k];
  }
}

TEST(InitMlp, ParameterCountAndDeterminism) {
  const MlpModel a = InitMlp({4, 8, 2}, 1);
  EXPECT_EQ(a.ParameterCount(), 4u * 8 + 8 + 8 * 2 + 2);
  EXPECT_EQ(a, InitMlp({4, 8, 2}, 1));
  EXPECT_FALSE(a == InitMlp({4, 8, 2}, 2));
}

TEST(InitMlp, LinearModelEmbeddingIsInput) {
  const MlpModel m = InitMlp({4, 2}, 1);
  EXPECT_EQ(m.embedding_dim(), 4u);
  Rng rng(2);
  const Matrix x = RandomMatrix(3, 4, rng);
  EXPECT_EQ(Forward(m, x).embedding, x);
}

TEST(InitMlp, RejectsNonBinaryOutput) {
  EXPECT_EQ(KindOf([] { InitMlp({4, 8, 3}, 1); }), ErrorKind::kShape);
}

TEST(Forward, ZeroWeightsGiveEvenProbabilities) {
  MlpModel m = InitMlp({3, 5, 2}, 1);
  m.params.Scale(0.0);
  Rng rng(3);
  const ForwardRecord r = Forward(m, RandomMatrix(4, 3, rng));
  EXPECT_TRUE(r.logits.isZero(0.0));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(r.probs(i, 0), 0.5);
    EXPECT_EQ(r.probs(i, 1), 0.5);
  }
  EXPECT_EQ(r.embedding.cols(), 5);
}

TEST(Forward, HandComputedFixture) {
  MlpModel m = InitMlp({1, 1, 2}, 1);
  m.params.weights[0](0, 0) = 2.0;
  m.params.biases[0](0) = -1.0;
  m.params.weights[1] << 3.0, -1.0;
  m.params.biases[1] << 0.5, 0.25;
  Matrix x(2, 1);
  x << 1.5, 0.25;
  const ForwardRecord r = Forward(m, x);
  // h = relu(2 * 1.5 - 1) = 2; h = relu(-0.5) = 0.
  EXPECT_EQ(r.embedding(0, 0), 2.0);
  EXPECT_EQ(r.embedding(1, 0), 0.0);
  EXPECT_EQ(r.logits(0, 0), 6.5);
  EXPECT_EQ(r.logits(0, 1), -1.75);
  EXPECT_EQ(r.logits(1, 0), 0.5);
  EXPECT_EQ(r.logits(1, 1), 0.25);
  EXPECT_NEAR(r.probs(0, 0), 1.0 / (1.0 + std::exp(-8.25)), 1e-15);
}

TEST(Forward, WidthMismatchIsShapeError) {
  const MlpModel m = InitMlp({3, 2}, 1);
  EXPECT_EQ(KindOf([&] { Forward(m, Matrix::Zero(2, 4)); }), ErrorKind::kShape);
}

TEST(Forward, ProbabilitiesSumToOneAndHeadMatchesEmbedding) {
  const MlpModel m = InitMlp({6, 9, 7, 2}, 4);
  Rng rng(5);
  const ForwardRecord r = Forward(m, RandomMatrix(50, 6, rng, 3.0));
  for (Eigen::Index i = 0; i < 50; ++i) {
    EXPECT_NEAR(r.probs.row(i).sum(), 1.0, 1e-15);
    EXPECT_GE(r.probs.row(i).minCoeff(), 0.0);
  }
  Matrix head = r.embedding * m.params.weights.back().transpose();
  head.rowwise() += m.params.biases.back().transpose();
  EXPECT_LE((head - r.logits).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Softmax, StableForLargeLogits) {
  Matrix z(1, 2);
  z << 1000.0, 0.0;
  const Matrix p = Softmax(z);
  EXPECT_EQ(p(0, 0), 1.0);
  EXPECT_TRUE(std::isfinite(p(0, 1)));
}

TEST(Loss, ZeroModelIsLogTwo) {
  MlpModel m = InitMlp({3, 4, 2}, 1);
  m.params.Scale(0.0);
  Rng rng(1);
  const std::vector<int> y = {0, 1, 1, 0};
  EXPECT_NEAR(LossAndGrads(m, RandomMatrix(4, 3, rng), y).loss, std::log(2.0), 1e-15);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  for (uint64_t seed : {1u, 2u, 3u}) {
    MlpModel m = InitMlp({3, 5, 4, 2}, seed);
    // Zero biases put dead rows exactly on the ReLU kink; move them off it.
    for (auto& b : m.params.biases) b = RandomMatrix(b.size(), 1, rng, 0.1);
    const Matrix x = RandomMatrix(7, 3, rng);
    const std::vector<int> y = {0, 1, 1, 0, 1, 0, 0};
    const std::vector<double> w = {1.0, 0.5, 2.0, 1.5, 0.25, 1.0, 3.0};
    const LossAndGradient lg = LossAndGrads(m, x, y, w);
    const auto numeric = NumericGradient(
        m, [&](const MlpModel& p) { return LossAndGrads(p, x, y, w).loss; });
    ExpectGradientsClose(lg.grads.Flatten(), numeric, 1e-4);
  }
}

TEST(Loss, DoublingWeightEqualsDuplicatingRow) {
  const MlpModel m = InitMlp({2, 3, 2}, 7);
  Rng rng(8);
  const Matrix x = RandomMatrix(3, 2, rng);
  const std::vector<int> y = {1, 0, 1};
  const LossAndGradient weighted = LossAndGrads(m, x, y, std::vector<double>{2, 1, 1});
  Matrix dup(4, 2);
  dup << x, x.row(0);
  const LossAndGradient duplicated = LossAndGrads(m, dup, std::vector<int>{1, 0, 1, 1});
  EXPECT_NEAR(weighted.loss, duplicated.loss, 1e-12);
  const auto a = weighted.grads.Flatten(), b = duplicated.grads.Flatten();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Loss, NegativeWeightRejected) {
  const MlpModel m = InitMlp({2, 2}, 1);
  EXPECT_EQ(KindOf([&] {
              LossAndGrads(m, Matrix::Zero(2, 2), std::vector<int>{0, 1},
                                     std::vector<double>{1.0, -1.0});
            }),
            ErrorKind::kValidation);
}

TEST(SgdStep, UpdateRule) {
  MlpModel m = InitMlp({1, 2}, 1);
  m.params.weights[0].setOnes();
  m.params.biases[0].setOnes();
  Parameters g = m.params.ZerosLike();
  EXPECT_EQ(SgdStep(m, g, 0.5, 0.0), m);
  g.weights[0].setConstant(0.5);
  EXPECT_EQ(SgdStep(m, g, 0.1, 0.0).params.weights[0](0, 0), 0.95);
  EXPECT_NEAR(SgdStep(m, m.params.ZerosLike(), 0.1, 0.1).params.weights[0](0, 0), 0.99, 1e-15);
  EXPECT_EQ(SgdStep(m, g, 1e-300, 0.0).params, m.params) << "lr so small it is a no-op";
}

TEST(SgdStep, ShapeMismatch) {
  MlpModel m = InitMlp({3, 2}, 1);
  const Parameters g = InitMlp({4, 2}, 1).params;
  EXPECT_EQ(KindOf([&] { SgdStepInPlace(m, g, 0.1, 0.0); }), ErrorKind::kShape);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  const LabeledDataset d = testing::SmallDataset(40, 3, 1);
  const MlpModel m = InitMlp({3, 4, 2}, 9);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(Train(m, d, cfg), m);
}

TEST(Train, FitsSeparableDataAndIsDeterministic) {
  const LabeledDataset d = testing::SmallDataset(200, 2, 3, 4.0);
  const MlpModel m = InitMlp({2, 8, 2}, 9);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.1;
  cfg.seed = 4;
  const MlpModel a = Train(m, d, cfg);
  EXPECT_LT(MeanLoss(a, d), 0.1);
  EXPECT_EQ(a, Train(m, d, cfg));
  cfg.seed = 5;
  EXPECT_FALSE(a == Train(m, d, cfg));
}

TEST(Train, RejectsBadConfig) {
  const LabeledDataset d = testing::SmallDataset(20, 2, 1);
  const MlpModel m = InitMlp({2, 2}, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_EQ(KindOf([&] { Train(m, d, cfg); }), ErrorKind::kValidation);
  cfg = TrainConfig{};
  cfg.sample_weights = {1.0};
  EXPECT_EQ(KindOf([&] { Train(m, d, cfg); }), ErrorKind::kValidation);
}

}  // namespace
}  // namespace fairaudit
