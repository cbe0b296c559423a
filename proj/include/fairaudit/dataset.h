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

// Labeled tabular data with a binary target and a binary sensitive attribute:
// synthetic generation, CSV ingestion, subgroup skewing and the
// member / non-member / shadow split.

#ifndef FAIRAUDIT_DATASET_H_
#define FAIRAUDIT_DATASET_H_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fairaudit/error.h"
#include "fairaudit/linalg.h"
#include "fairaudit/rng.h"

namespace fairaudit {

enum class Membership : uint8_t { kUnassigned, kMember, kNonmember };

struct LabeledDataset {
  Matrix features;                     // n x d
  std::vector<int> labels;             // target y in {0, 1}
  std::vector<int> groups;             // sensitive attribute s in {0, 1}
  std::vector<Membership> membership;
  // Stable example identifiers; rows keep their id through every subset, so
  // disjointness of splits can be checked on ids.
  std::vector<uint64_t> ids;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  void Validate() const {
    const std::size_t n = size();
    Require(n >= 1, ErrorKind::kValidation, "dataset must have at least one row");
    Require(static_cast<std::size_t>(features.rows()) == n &&
                groups.size() == n && membership.size() == n && ids.size() == n,
            ErrorKind::kValidation, "dataset containers differ in row count");
    for (std::size_t i = 0; i < n; ++i) {
      Require(labels[i] == 0 || labels[i] == 1, ErrorKind::kDomain,
              "label outside {0,1} at row " + std::to_string(i));
      Require(groups[i] == 0 || groups[i] == 1, ErrorKind::kDomain,
              "group outside {0,1} at row " + std::to_string(i));
    }
  }

  LabeledDataset Subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    out.groups.reserve(rows.size());
    out.membership.reserve(rows.size());
    out.ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(rows[i]);
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
      out.labels.push_back(labels[rows[i]]);
      out.groups.push_back(groups[rows[i]]);
      out.membership.push_back(membership[rows[i]]);
      out.ids.push_back(ids[rows[i]]);
    }
    return out;
  }

  // Row indices with the given (label, group); -1 matches any value.
  std::vector<std::size_t> RowsWhere(int label, int group) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i) {
      if ((label < 0 || labels[i] == label) && (group < 0 || groups[i] == group)) {
        rows.push_back(i);
      }
    }
    return rows;
  }
};

inline LabeledDataset Concatenate(const LabeledDataset& a, const LabeledDataset& b) {
  Require(a.dim() == b.dim(), ErrorKind::kShape, "feature widths differ");
  LabeledDataset out;
  out.features.resize(a.features.rows() + b.features.rows(), a.features.cols());
  out.features << a.features, b.features;
  auto append = [](auto& dst, const auto& x, const auto& y) {
    dst = x;
    dst.insert(dst.end(), y.begin(), y.end());
  };
  append(out.labels, a.labels, b.labels);
  append(out.groups, a.groups, b.groups);
  append(out.membership, a.membership, b.membership);
  append(out.ids, a.ids, b.ids);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

struct SyntheticSpec {
  std::size_t dim = 16;
  std::size_t n = 12000;
  // Per-group and per-class additive mean shifts (index 0 / 1). Vectors
  // shorter than dim are zero-padded.
  std::array<std::vector<double>, 2> group_mean_shift;
  std::array<std::vector<double>, 2> class_mean_shift;
  double noise_std = 1.0;
  // Fraction of group 0 (the majority group) within every label class.
  double skew_ratio = 0.9;
  uint64_t seed = 0;

  void Validate() const {
    Require(dim >= 1, ErrorKind::kValidation, "SyntheticSpec.dim must be positive");
    Require(n >= 1, ErrorKind::kValidation, "SyntheticSpec.n must be positive");
    Require(noise_std > 0.0 && std::isfinite(noise_std), ErrorKind::kValidation,
            "SyntheticSpec.noise_std must be positive");
    Require(skew_ratio >= 0.5 && skew_ratio < 1.0, ErrorKind::kValidation,
            "SyntheticSpec.skew_ratio must lie in [0.5, 1.0)");
    for (int k = 0; k < 2; ++k) {
      Require(group_mean_shift[k].size() <= dim, ErrorKind::kValidation,
              "SyntheticSpec.group_mean_shift longer than dim");
      Require(class_mean_shift[k].size() <= dim, ErrorKind::kValidation,
              "SyntheticSpec.class_mean_shift longer than dim");
    }
  }
};

namespace internal {

inline double ShiftAt(const std::vector<double>& shift, std::size_t j) {
  return j < shift.size() ? shift[j] : 0.0;
}

}  // namespace internal

inline LabeledDataset GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);

  // Cell layout first: labels balanced within one row, majority share fixed
  // per class.
  std::vector<std::pair<int, int>> cells;  // (label, group)
  cells.reserve(spec.n);
  const std::size_t n1 = spec.n / 2;
  const std::array<std::size_t, 2> class_count = {spec.n - n1, n1};
  for (int y = 0; y < 2; ++y) {
    const auto majority = static_cast<std::size_t>(
        std::llround(spec.skew_ratio * static_cast<double>(class_count[y])));
    for (std::size_t i = 0; i < class_count[y]; ++i) {
      cells.emplace_back(y, i < majority ? 0 : 1);
    }
  }
  rng.Shuffle(std::span(cells));

  LabeledDataset data;
  data.features.resize(static_cast<Eigen::Index>(spec.n),
                       static_cast<Eigen::Index>(spec.dim));
  data.labels.resize(spec.n);
  data.groups.resize(spec.n);
  data.membership.assign(spec.n, Membership::kUnassigned);
  data.ids.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto [y, s] = cells[i];
    data.labels[i] = y;
    data.groups[i] = s;
    data.ids[i] = i;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const double mean = internal::ShiftAt(spec.class_mean_shift[y], j) +
                          internal::ShiftAt(spec.group_mean_shift[s], j);
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          mean + spec.noise_std * rng.Normal();
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  std::string label_column = "label";
  std::string group_column = "group";
  // Empty means every column that is not label, group, member or id.
  std::vector<std::string> feature_columns;
  // Optional columns; ignored when absent from the header.
  std::string member_column = "member";
  std::string id_column = "id";
};

namespace internal {

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    std::size_t start = 0;
    while (start < c.size() && c[start] == ' ') ++start;
    c.erase(0, start);
  }
  return cells;
}

inline double ParseReal(const std::string& text, std::size_t row,
                        const std::string& column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    Fail(ErrorKind::kParse, "non-numeric cell '" + text + "' at row " +
                                std::to_string(row) + ", column '" + column + "'");
  }
  return value;
}

inline int ParseBinary(const std::string& text, std::size_t row,
                       const std::string& column) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  Fail(ErrorKind::kDomain, "value '" + text + "' outside {0,1} at row " +
                               std::to_string(row) + ", column '" + column + "'");
}

}  // namespace internal

// Reads a comma-delimited file with one header row. Row indices in error
// messages count data rows from 0.
inline LabeledDataset IngestCsv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kIo, "cannot open CSV file: " + path);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorKind::kSchema,
          "CSV file has no header row: " + path);
  const std::vector<std::string> header = internal::SplitCsvLine(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = find(schema.label_column);
  const auto group_col = find(schema.group_column);
  Require(label_col.has_value(), ErrorKind::kSchema,
          "missing label column '" + schema.label_column + "' in " + path);
  Require(group_col.has_value(), ErrorKind::kSchema,
          "missing group column '" + schema.group_column + "' in " + path);
  const auto member_col = find(schema.member_column);
  const auto id_col = find(schema.id_column);

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == *label_col || c == *group_col || (member_col && c == *member_col) ||
          (id_col && c == *id_col)) {
        continue;
      }
      feature_cols.push_back(c);
      feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      const auto c = find(name);
      Require(c.has_value(), ErrorKind::kSchema,
              "missing feature column '" + name + "' in " + path);
      feature_cols.push_back(*c);
      feature_names.push_back(name);
    }
  }
  Require(!feature_cols.empty(), ErrorKind::kSchema, "no feature columns in " + path);

  std::vector<double> values;
  LabeledDataset data;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = internal::SplitCsvLine(line);
    Require(cells.size() == header.size(), ErrorKind::kParse,
            "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                " cells, header has " + std::to_string(header.size()));
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      values.push_back(internal::ParseReal(cells[feature_cols[k]], row, feature_names[k]));
    }
    data.labels.push_back(internal::ParseBinary(cells[*label_col], row, schema.label_column));
    data.groups.push_back(internal::ParseBinary(cells[*group_col], row, schema.group_column));
    Membership m = Membership::kUnassigned;
    if (member_col) {
      const std::string& cell = cells[*member_col];
      if (cell == "1") {
        m = Membership::kMember;
      } else if (cell == "0") {
        m = Membership::kNonmember;
      } else if (!cell.empty()) {
        Fail(ErrorKind::kDomain, "member value '" + cell + "' outside {0,1,empty} at row " +
                                     std::to_string(row));
      }
    }
    data.membership.push_back(m);
    if (id_col) {
      uint64_t id = 0;
      const std::string& cell = cells[*id_col];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), id);
      Require(ec == std::errc() && ptr == cell.data() + cell.size(), ErrorKind::kParse,
              "bad id '" + cell + "' at row " + std::to_string(row));
      data.ids.push_back(id);
    } else {
      data.ids.push_back(row);
    }
    ++row;
  }
  Require(row >= 1, ErrorKind::kValidation, "CSV file has no data rows: " + path);
  data.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(row),
                                     static_cast<Eigen::Index>(feature_cols.size()));
  data.Validate();
  return data;
}

// Writes the CSV layout IngestCsv reads back: id, f0..f{d-1}, label, group,
// member (1 / 0 / empty). Reals use 17 significant digits.
inline void WriteCsv(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path + ".tmp");
  Require(out.good(), ErrorKind::kIo, "cannot write CSV file: " + path);
  out << "id";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << ",label,group,member\n";
  char buffer[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.ids[i];
    for (std::size_t j = 0; j < data.dim(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g",
                    data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << ',' << buffer;
    }
    out << ',' << data.labels[i] << ',' << data.groups[i] << ',';
    if (data.membership[i] == Membership::kMember) out << '1';
    if (data.membership[i] == Membership::kNonmember) out << '0';
    out << '\n';
  }
  out.close();
  Require(out.good(), ErrorKind::kIo, "failed writing CSV file: " + path);
  std::rename((path + ".tmp").c_str(), path.c_str());
}

// ---------------------------------------------------------------------------
// Skew

// Largest per-class size n' such that round(ratio * n') majority rows and
// n' - round(ratio * n') minority rows fit in every label class.
inline std::size_t FeasibleSkewSize(std::size_t majority_available,
                                    std::size_t minority_available, double ratio) {
  // Start from the real-valued bound so that ratio 0.5 gives exactly twice the
  // smaller group rather than one extra majority row from rounding.
  const double bound = std::min(static_cast<double>(majority_available) / ratio,
                                static_cast<double>(minority_available) / (1.0 - ratio));
  const auto start = std::min(majority_available + minority_available,
                              static_cast<std::size_t>(std::floor(bound + 1e-9)));
  for (std::size_t size = start; size > 0; --size) {
    const auto majority =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(size)));
    if (majority <= majority_available && size - majority <= minority_available) {
      return size;
    }
  }
  return 0;
}

inline LabeledDataset ApplySkew(const LabeledDataset& data, double ratio,
                                int majority_group, uint64_t seed) {
  data.Validate();
  Require(ratio >= 0.5 && ratio < 1.0, ErrorKind::kValidation,
          "skew ratio must lie in [0.5, 1.0)");
  Require(majority_group == 0 || majority_group == 1, ErrorKind::kValidation,
          "majority group must be 0 or 1");
  const int minority_group = 1 - majority_group;

  std::array<std::vector<std::size_t>, 2> majority_rows, minority_rows;
  std::size_t per_class = SIZE_MAX;
  for (int y = 0; y < 2; ++y) {
    majority_rows[y] = data.RowsWhere(y, majority_group);
    minority_rows[y] = data.RowsWhere(y, minority_group);
    Require(!majority_rows[y].empty() && !minority_rows[y].empty(),
            ErrorKind::kInfeasible,
            "infeasible skew: label " + std::to_string(y) + " lacks one of the groups");
    per_class = std::min(per_class, FeasibleSkewSize(majority_rows[y].size(),
                                                     minority_rows[y].size(), ratio));
  }

  Rng rng(seed);
  const auto majority_take =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(per_class)));
  std::vector<std::size_t> keep;
  for (int y = 0; y < 2; ++y) {
    rng.Shuffle(std::span(majority_rows[y]));
    rng.Shuffle(std::span(minority_rows[y]));
    keep.insert(keep.end(), majority_rows[y].begin(),
                majority_rows[y].begin() + static_cast<std::ptrdiff_t>(majority_take));
    keep.insert(keep.end(), minority_rows[y].begin(),
                minority_rows[y].begin() +
                    static_cast<std::ptrdiff_t>(per_class - majority_take));
  }
  std::sort(keep.begin(), keep.end());
  return data.Subset(keep);
}

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  double member_fraction = 1.0 / 3.0;
  double nonmember_fraction = 1.0 / 3.0;
  double shadow_fraction = 1.0 / 3.0;
  uint64_t seed = 0;

  void Validate() const {
    for (double f : {member_fraction, nonmember_fraction, shadow_fraction}) {
      Require(f > 0.0 && f < 1.0, ErrorKind::kValidation,
              "split fractions must lie in (0, 1)");
    }
    Require(std::abs(member_fraction + nonmember_fraction + shadow_fraction - 1.0) <= 1e-9,
            ErrorKind::kValidation, "split fractions must sum to 1");
  }
};

struct SplitIndices {
  std::vector<std::size_t> members, nonmembers, shadow;
};

struct Splits {
  LabeledDataset members, nonmembers, shadow_pool;
};

inline SplitIndices MakeSplitIndices(std::size_t n, const SplitSpec& spec) {
  spec.Validate();
  Require(n >= 10, ErrorKind::kValidation, "splitting needs at least 10 rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.Shuffle(std::span(order));
  const auto members = static_cast<std::size_t>(
      std::llround(spec.member_fraction * static_cast<double>(n)));
  const auto nonmembers = static_cast<std::size_t>(
      std::llround(spec.nonmember_fraction * static_cast<double>(n)));
  Require(members + nonmembers < n, ErrorKind::kValidation,
          "split leaves no rows for the shadow pool");
  SplitIndices out;
  out.members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(members));
  out.nonmembers.assign(order.begin() + static_cast<std::ptrdiff_t>(members),
                        order.begin() + static_cast<std::ptrdiff_t>(members + nonmembers));
  out.shadow.assign(order.begin() + static_cast<std::ptrdiff_t>(members + nonmembers),
                    order.end());
  return out;
}

inline Splits MakeSplits(const LabeledDataset& data, const SplitSpec& spec) {
  data.Validate();
  const SplitIndices idx = MakeSplitIndices(data.size(), spec);
  Splits out{data.Subset(idx.members), data.Subset(idx.nonmembers),
             data.Subset(idx.shadow)};
  std::fill(out.members.membership.begin(), out.members.membership.end(),
            Membership::kMember);
  std::fill(out.nonmembers.membership.begin(), out.nonmembers.membership.end(),
            Membership::kNonmember);
  std::fill(out.shadow_pool.membership.begin(), out.shadow_pool.membership.end(),
            Membership::kUnassigned);
  return out;
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_DATASET_H_
