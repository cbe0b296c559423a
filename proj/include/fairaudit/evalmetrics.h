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

// Attack and target evaluation metrics. Ties always earn half credit, so the
// trapezoidal area under RocPoints equals Auc.

#ifndef FAIRAUDIT_EVALMETRICS_H_
#define FAIRAUDIT_EVALMETRICS_H_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/error.h"
#include "fairaudit/model_io.h"

namespace fairaudit {

namespace internal {

inline void CheckScores(std::span<const double> scores, std::span<const int> truth) {
  Require(!scores.empty(), ErrorKind::kValidation, "scores must be nonempty");
  Require(scores.size() == truth.size(), ErrorKind::kValidation,
          "scores and truth differ in length");
}

inline std::pair<std::size_t, std::size_t> ClassCounts(std::span<const int> truth) {
  std::size_t positives = 0;
  for (int t : truth) positives += t == 1 ? 1 : 0;
  return {positives, truth.size() - positives};
}

inline void RequireBothClasses(std::span<const int> truth) {
  const auto [pos, neg] = ClassCounts(truth);
  Require(pos > 0 && neg > 0, ErrorKind::kValidation, "truth must contain both classes");
}

}  // namespace internal

// Fraction of rows where (score >= threshold) agrees with truth.
inline double AccuracyAtThreshold(std::span<const double> scores, std::span<const int> truth,
                                  double threshold = 0.5) {
  internal::CheckScores(scores, truth);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    correct += ((scores[i] >= threshold ? 1 : 0) == truth[i]) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

// Mann-Whitney statistic via average ranks, O(n log n).
inline double Auc(std::span<const double> scores, std::span<const int> truth) {
  internal::CheckScores(scores, truth);
  internal::RequireBothClasses(truth);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share their average.
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) {
      if (truth[order[k]] == 1) positive_rank_sum += rank;
    }
    i = j + 1;
  }
  const auto [pos, neg] = internal::ClassCounts(truth);
  const double p = static_cast<double>(pos);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

struct RocPoint {
  double threshold;  // predict positive when score >= threshold
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;

  double TrapezoidArea() const {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    }
    return area;
  }
};

// One point per distinct score, from a single descending sort; starts at
// (0,0) with threshold +inf and ends at (1,1).
inline RocCurve RocPoints(std::span<const double> scores, std::span<const int> truth) {
  internal::CheckScores(scores, truth);
  internal::RequireBothClasses(truth);
  const auto [pos, neg] = internal::ClassCounts(truth);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (truth[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return curve;
}

// Smallest number of negatives at which target_fpr is resolvable.
inline std::size_t MinNegativesFor(double target_fpr) {
  return static_cast<std::size_t>(std::ceil(1.0 / target_fpr - 1e-9));
}

// TPR of the most permissive ROC operating point whose empirical FPR does not
// exceed target_fpr (step interpolation).
inline double TprAtFpr(std::span<const double> scores, std::span<const int> truth,
                       double target_fpr) {
  Require(target_fpr > 0.0 && target_fpr < 1.0, ErrorKind::kValidation,
          "target FPR must lie in (0, 1)");
  internal::CheckScores(scores, truth);
  const auto [pos, neg] = internal::ClassCounts(truth);
  const std::size_t needed = MinNegativesFor(target_fpr);
  if (neg < needed) {
    Fail(ErrorKind::kResolution, "TPR at FPR " + std::to_string(target_fpr) + " needs at least " +
                                     std::to_string(needed) + " negatives, got " +
                                     std::to_string(neg));
  }
  const RocCurve curve = RocPoints(scores, truth);
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.fpr <= target_fpr) best = std::max(best, p.tpr);
  }
  return best;
}

// threshold,fpr,tpr with 17 significant digits; the leading threshold is "inf".
inline std::string RocCsv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  char line[96];
  for (const auto& p : curve.points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    out += line;
  }
  return out;
}

inline void WriteRocCsv(const RocCurve& curve, const std::string& path) {
  WriteFileAtomic(path, RocCsv(curve));
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_EVALMETRICS_H_
