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

#include "fairaudit/dataset.h"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "test_util.h"

namespace fairaudit {
namespace {

using testing::KindOf;
using testing::TempDir;

std::size_t CountCell(const LabeledDataset& d, int y, int s) { return d.RowsWhere(y, s).size(); }

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

TEST(GenerateSynthetic, CountsFollowSkewAndBalancedLabels) {
  SyntheticSpec spec;
  spec.n = 1000;
  spec.dim = 4;
  spec.skew_ratio = 0.9;
  spec.seed = 3;
  const LabeledDataset d = GenerateSynthetic(spec);
  ASSERT_EQ(d.size(), 1000u);
  std::size_t group0 = CountCell(d, 0, 0) + CountCell(d, 1, 0);
  std::size_t label1 = CountCell(d, 1, 0) + CountCell(d, 1, 1);
  EXPECT_NEAR(static_cast<double>(group0), 900.0, 1.0);
  EXPECT_NEAR(static_cast<double>(label1), 500.0, 1.0);
  for (int y = 0; y < 2; ++y) {
    const double share = static_cast<double>(CountCell(d, y, 0)) /
                         static_cast<double>(CountCell(d, y, 0) + CountCell(d, y, 1));
    EXPECT_NEAR(share, 0.9, 1.0 / 500.0);
  }
}

TEST(GenerateSynthetic, SameSeedSameData) {
  SyntheticSpec spec;
  spec.n = 300;
  spec.dim = 5;
  spec.seed = 11;
  const LabeledDataset a = GenerateSynthetic(spec), b = GenerateSynthetic(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.groups, b.groups);
  spec.seed = 12;
  EXPECT_NE(GenerateSynthetic(spec).features, a.features);
}

TEST(GenerateSynthetic, GroupMeansMatchShift) {
  SyntheticSpec spec;
  spec.n = 4000;
  spec.dim = 2;
  spec.noise_std = 1.0;
  spec.group_mean_shift = {std::vector<double>{1.0, 0.0}, std::vector<double>{-1.0, 0.0}};
  spec.seed = 5;
  const LabeledDataset d = GenerateSynthetic(spec);
  for (int s = 0; s < 2; ++s) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.groups[i] != s) continue;
      mean += d.features.row(static_cast<Eigen::Index>(i));
      ++count;
    }
    mean /= static_cast<double>(count);
    const double tol = 3.0 / std::sqrt(static_cast<double>(count));
    EXPECT_NEAR(mean(0), s == 0 ? 1.0 : -1.0, tol);
    EXPECT_NEAR(mean(1), 0.0, tol);
  }
}

TEST(GenerateSynthetic, RejectsInvalidSpec) {
  SyntheticSpec spec;
  spec.noise_std = 0.0;
  try {
    GenerateSynthetic(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("noise_std"), std::string::npos);
  }
  spec = SyntheticSpec{};
  spec.skew_ratio = 1.0;
  EXPECT_EQ(KindOf([&] { GenerateSynthetic(spec); }), ErrorKind::kValidation);
  spec = SyntheticSpec{};
  spec.dim = 2;
  spec.class_mean_shift = {std::vector<double>{1, 2, 3}, std::vector<double>{}};
  EXPECT_EQ(KindOf([&] { GenerateSynthetic(spec); }), ErrorKind::kValidation);
}

TEST(IngestCsv, ReadsValidFile) {
  TempDir dir("csv");
  WriteText(dir.file("a.csv"), "x1,x2,label,group\n1.5,2,1,0\n-3,4e-1,0,1\n0,0,1,1\n");
  const LabeledDataset d = IngestCsv(dir.file("a.csv"));
  ASSERT_EQ(d.size(), 3u);
  ASSERT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.features(1, 1), 0.4);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(d.groups, (std::vector<int>{0, 1, 1}));
}

TEST(IngestCsv, MissingGroupColumnIsSchemaError) {
  TempDir dir("csv");
  WriteText(dir.file("a.csv"), "x1,label\n1,0\n");
  EXPECT_EQ(KindOf([&] { IngestCsv(dir.file("a.csv")); }), ErrorKind::kSchema);
}

TEST(IngestCsv, NonNumericFeatureNamesRow) {
  TempDir dir("csv");
  WriteText(dir.file("a.csv"), "x1,label,group\n1,0,0\nabc,1,1\n");
  try {
    IngestCsv(dir.file("a.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(IngestCsv, LabelOutsideBinaryIsDomainError) {
  TempDir dir("csv");
  WriteText(dir.file("a.csv"), "x1,label,group\n1,2,0\n");
  EXPECT_EQ(KindOf([&] { IngestCsv(dir.file("a.csv")); }), ErrorKind::kDomain);
}

TEST(IngestCsv, RoundTripsWriteCsv) {
  TempDir dir("csv");
  LabeledDataset d = testing::SmallDataset(40, 3, 9);
  d.membership[0] = Membership::kMember;
  d.membership[1] = Membership::kNonmember;
  WriteCsv(d, dir.file("d.csv"));
  const LabeledDataset back = IngestCsv(dir.file("d.csv"));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.groups, d.groups);
  EXPECT_EQ(back.membership, d.membership);
  EXPECT_EQ(back.ids, d.ids);
}

LabeledDataset CellDataset(std::size_t y0s0, std::size_t y0s1, std::size_t y1s0,
                           std::size_t y1s1) {
  LabeledDataset d;
  const std::size_t n = y0s0 + y0s1 + y1s0 + y1s1;
  d.features = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
  auto add = [&](std::size_t count, int y, int s) {
    for (std::size_t i = 0; i < count; ++i) {
      d.features(static_cast<Eigen::Index>(d.labels.size()), 0) = static_cast<double>(d.labels.size());
      d.labels.push_back(y);
      d.groups.push_back(s);
      d.membership.push_back(Membership::kUnassigned);
      d.ids.push_back(d.ids.size());
    }
  };
  add(y0s0, 0, 0);
  add(y0s1, 0, 1);
  add(y1s0, 1, 0);
  add(y1s1, 1, 1);
  return d;
}

TEST(ApplySkew, HitsRatioInEachClass) {
  const LabeledDataset d = CellDataset(900, 900, 900, 900);
  const LabeledDataset skewed = ApplySkew(d, 0.9, 0, 1);
  for (int y = 0; y < 2; ++y) {
    EXPECT_EQ(CountCell(skewed, y, 0), 900u);
    EXPECT_EQ(CountCell(skewed, y, 1), 100u);
  }
}

TEST(ApplySkew, EvenRatioUsesTwiceTheSmallerGroup) {
  const LabeledDataset skewed = ApplySkew(CellDataset(500, 200, 500, 200), 0.5, 0, 1);
  for (int y = 0; y < 2; ++y) {
    EXPECT_EQ(CountCell(skewed, y, 0), 200u);
    EXPECT_EQ(CountCell(skewed, y, 1), 200u);
  }
}

TEST(ApplySkew, MissingMinorityIsInfeasible) {
  EXPECT_EQ(KindOf([] { ApplySkew(CellDataset(50, 50, 50, 0), 0.9, 0, 1); }),
            ErrorKind::kInfeasible);
}

TEST(ApplySkew, RatioWithinOneRowForRandomInputs) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const LabeledDataset d = CellDataset(20 + rng.Below(300), 20 + rng.Below(300),
                                         20 + rng.Below(300), 20 + rng.Below(300));
    const double ratio = rng.Uniform(0.5, 0.97);
    const LabeledDataset skewed = ApplySkew(d, ratio, 0, trial);
    for (int y = 0; y < 2; ++y) {
      const double total = static_cast<double>(CountCell(skewed, y, 0) + CountCell(skewed, y, 1));
      ASSERT_GT(total, 0.0);
      EXPECT_LE(std::abs(static_cast<double>(CountCell(skewed, y, 0)) - ratio * total), 1.0);
    }
  }
}

TEST(MakeSplits, SizesPartitionAndFlags) {
  const LabeledDataset d = testing::SmallDataset(1000, 2, 4);
  SplitSpec spec{0.3, 0.3, 0.4, 8};
  const Splits s = MakeSplits(d, spec);
  EXPECT_EQ(s.members.size(), 300u);
  EXPECT_EQ(s.nonmembers.size(), 300u);
  EXPECT_EQ(s.shadow_pool.size(), 400u);
  std::set<uint64_t> ids;
  for (const auto* part : {&s.members, &s.nonmembers, &s.shadow_pool}) {
    ids.insert(part->ids.begin(), part->ids.end());
  }
  EXPECT_EQ(ids.size(), 1000u);
  for (auto m : s.members.membership) EXPECT_EQ(m, Membership::kMember);
  for (auto m : s.nonmembers.membership) EXPECT_EQ(m, Membership::kNonmember);
  for (auto m : s.shadow_pool.membership) EXPECT_EQ(m, Membership::kUnassigned);

  const Splits again = MakeSplits(d, spec);
  EXPECT_EQ(again.members.ids, s.members.ids);
  spec.seed = 9;
  EXPECT_NE(MakeSplits(d, spec).members.ids, s.members.ids);
}

TEST(MakeSplits, FractionsMustSumToOne) {
  const LabeledDataset d = testing::SmallDataset(100, 2, 4);
  EXPECT_EQ(KindOf([&] { MakeSplits(d, SplitSpec{0.5, 0.4, 0.4, 1}); }),
            ErrorKind::kValidation);
}

}  // namespace
}  // namespace fairaudit
