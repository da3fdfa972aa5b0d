/*
 * Copyright 2026 the tops authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TOPS_DATASET_HPP
#define TOPS_DATASET_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tops/errors.hpp"
#include "tops/random.hpp"

namespace tops {

enum class FeatureKind { binary, continuous };
enum class LabelKind { binary, real };

struct FeatureSpec {
  int index = 0;
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
};

/// Immutable tabular dataset: row-major feature matrix plus labels.
/// Binary features hold exactly {0,1}; continuous features hold arbitrary
/// finite reals until normalize() maps them into [0,1].
class Dataset {
 public:
  Dataset(std::vector<double> features, std::vector<double> labels,
          std::vector<FeatureSpec> specs, LabelKind label_kind)
      : features_(std::move(features)),
        labels_(std::move(labels)),
        specs_(std::move(specs)),
        label_kind_(label_kind) {
    cols_ = static_cast<int>(specs_.size());
    if (cols_ < 1) throw DataError("dataset needs at least one feature");
    if (labels_.empty()) throw DataError("dataset needs at least one row");
    if (features_.size() != labels_.size() * static_cast<std::size_t>(cols_))
      throw DataError("feature matrix shape does not match label count");
    rows_ = static_cast<int>(labels_.size());
    for (int j = 0; j < cols_; ++j) {
      if (specs_[static_cast<std::size_t>(j)].index != j)
        throw DataError("feature specs must be indexed 0..d-1 without gaps");
    }
    for (double v : features_) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    for (double v : labels_) {
      if (!std::isfinite(v)) throw DataError("non-finite label value");
    }
    for (const auto& spec : specs_) {
      if (spec.kind != FeatureKind::binary) continue;
      for (int r = 0; r < rows_; ++r) {
        const double v = feature(r, spec.index);
        if (v != 0.0 && v != 1.0)
          throw DataError("binary feature '" + spec.name +
                          "' holds a value outside {0,1}");
      }
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double feature(int row, int col) const {
    return features_[static_cast<std::size_t>(row) *
                         static_cast<std::size_t>(cols_) +
                     static_cast<std::size_t>(col)];
  }

  std::span<const double> row(int r) const {
    return {features_.data() +
                static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_),
            static_cast<std::size_t>(cols_)};
  }

  double label(int row) const { return labels_[static_cast<std::size_t>(row)]; }
  const std::vector<double>& labels() const { return labels_; }
  const std::vector<FeatureSpec>& specs() const { return specs_; }
  const FeatureSpec& spec(int col) const {
    return specs_[static_cast<std::size_t>(col)];
  }
  LabelKind label_kind() const { return label_kind_; }

 private:
  std::vector<double> features_;
  std::vector<double> labels_;
  std::vector<FeatureSpec> specs_;
  LabelKind label_kind_;
  int rows_ = 0;
  int cols_ = 0;
};

/// Per-feature min/max observed on the fit rows. Binary features keep the
/// identity range {0,1}.
struct NormalizationParams {
  struct Range {
    double min = 0.0;
    double max = 1.0;
  };
  std::vector<Range> ranges;
};

/// Disjoint row-index sets: training set and the two validation sets.
struct Partition {
  std::vector<int> s;
  std::vector<int> v1;
  std::vector<int> v2;
};

/// Axis-aligned half-open box in feature space. Membership is
/// lo <= x_i < hi for every feature; the root box uses an upper bound just
/// above 1 so the value 1.0 is a member.
class Cell {
 public:
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
  };

  Cell() = default;
  explicit Cell(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
    for (const auto& b : bounds_) {
      if (!(b.lo < b.hi)) throw DataError("cell interval must have lo < hi");
    }
  }

  static Cell root(int dims) {
    std::vector<Interval> b(static_cast<std::size_t>(dims),
                            Interval{0.0, upper_closure()});
    return Cell(std::move(b));
  }

  /// Upper bound of the root box: the smallest double above 1.0.
  static double upper_closure() { return std::nextafter(1.0, 2.0); }

  int dims() const { return static_cast<int>(bounds_.size()); }
  const Interval& interval(int f) const {
    return bounds_[static_cast<std::size_t>(f)];
  }
  const std::vector<Interval>& bounds() const { return bounds_; }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      if (x[i] < bounds_[i].lo || x[i] >= bounds_[i].hi) return false;
    }
    return true;
  }

  /// True if tau properly splits this cell's interval on the feature.
  bool admits_threshold(int feature, double tau) const {
    const auto& b = interval(feature);
    return tau > b.lo && tau < b.hi;
  }

  /// Children {x_f < tau} and {x_f >= tau}; together they partition the cell.
  std::pair<Cell, Cell> split(int feature, double tau) const {
    if (!admits_threshold(feature, tau))
      throw DataError("threshold does not properly split the cell");
    Cell lower = *this;
    Cell upper = *this;
    lower.bounds_[static_cast<std::size_t>(feature)].hi = tau;
    upper.bounds_[static_cast<std::size_t>(feature)].lo = tau;
    return {std::move(lower), std::move(upper)};
  }

 private:
  std::vector<Interval> bounds_;
};

/// Column schema for CSV ingestion.
struct DataSchema {
  std::string label;
  std::vector<std::string> binary;
  std::optional<LabelKind> label_kind;  // inferred from values when absent
};

namespace detail {

inline std::vector<std::string> split_csv_record(const std::string& line,
                                                 int file_line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted)
    throw DataError("unterminated quote at line " + std::to_string(file_line));
  out.push_back(field);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r'))
    --b;
  return s.substr(a, b - a);
}

inline double parse_cell(const std::string& raw, int file_line,
                         const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty())
    throw DataError("missing value at line " + std::to_string(file_line) +
                    ", column '" + column + "'");
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw DataError("non-numeric value '" + s + "' at line " +
                    std::to_string(file_line) + ", column '" + column + "'");
  return value;
}

}  // namespace detail

/// Loads an RFC-4180-style CSV with a header row. Declared binary columns are
/// checked against {0,1}; everything else (except the label) is continuous.
/// Missing or non-numeric cells are rejected with their location.
inline Dataset load_csv(const std::string& path, const DataSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  const auto header = detail::split_csv_record(line, 1);

  std::vector<std::string> names;
  names.reserve(header.size());
  for (const auto& h : header) names.push_back(detail::trim(h));

  int label_col = -1;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == schema.label) label_col = static_cast<int>(j);
  }
  if (label_col < 0)
    throw DataError("label column '" + schema.label + "' not found in '" +
                    path + "'");

  std::vector<FeatureSpec> specs;
  std::vector<int> feature_cols;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (static_cast<int>(j) == label_col) continue;
    FeatureSpec spec;
    spec.index = static_cast<int>(specs.size());
    spec.name = names[j];
    const bool is_binary =
        std::find(schema.binary.begin(), schema.binary.end(), names[j]) !=
        schema.binary.end();
    spec.kind = is_binary ? FeatureKind::binary : FeatureKind::continuous;
    specs.push_back(std::move(spec));
    feature_cols.push_back(static_cast<int>(j));
  }
  if (specs.empty()) throw DataError("'" + path + "' has no feature columns");

  for (const auto& b : schema.binary) {
    if (std::find(names.begin(), names.end(), b) == names.end())
      throw DataError("declared binary column '" + b + "' not found in '" +
                      path + "'");
  }

  std::vector<double> features;
  std::vector<double> labels;
  int file_line = 1;
  while (std::getline(in, line)) {
    ++file_line;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto record = detail::split_csv_record(line, file_line);
    if (record.size() != names.size())
      throw DataError("line " + std::to_string(file_line) + " has " +
                      std::to_string(record.size()) + " fields, expected " +
                      std::to_string(names.size()));
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const int col = feature_cols[k];
      const double v = detail::parse_cell(record[static_cast<std::size_t>(col)],
                                          file_line, names[static_cast<std::size_t>(col)]);
      if (specs[k].kind == FeatureKind::binary && v != 0.0 && v != 1.0)
        throw DataError("binary column '" + specs[k].name + "' has value " +
                        std::to_string(v) + " at line " +
                        std::to_string(file_line));
      features.push_back(v);
    }
    labels.push_back(detail::parse_cell(
        record[static_cast<std::size_t>(label_col)], file_line, schema.label));
  }
  if (labels.empty()) throw DataError("'" + path + "' has no data rows");

  LabelKind kind;
  if (schema.label_kind) {
    kind = *schema.label_kind;
    if (kind == LabelKind::binary) {
      for (double y : labels) {
        if (y != 0.0 && y != 1.0)
          throw DataError("label declared binary but holds value " +
                          std::to_string(y));
      }
    }
  } else {
    kind = LabelKind::binary;
    for (double y : labels) {
      if (y != 0.0 && y != 1.0) {
        kind = LabelKind::real;
        break;
      }
    }
  }
  return Dataset(std::move(features), std::move(labels), std::move(specs),
                 kind);
}

inline Dataset load_csv(const std::string& path, const std::string& label,
                        const std::vector<std::string>& binary_columns) {
  DataSchema schema;
  schema.label = label;
  schema.binary = binary_columns;
  return load_csv(path, schema);
}

namespace detail {

inline double apply_range(double v, const NormalizationParams::Range& r) {
  const double span = r.max - r.min;
  // A feature constant on the fit rows maps to zero everywhere; it can never
  // carry a split.
  if (!(span > 0.0)) return 0.0;
  const double scaled = (v - r.min) / span;
  return std::clamp(scaled, 0.0, 1.0);
}

}  // namespace detail

/// Min-max scales every continuous feature into [0,1] using statistics from
/// the fit rows; rows outside the fit set are clamped. Binary features pass
/// through untouched.
inline std::pair<Dataset, NormalizationParams> normalize(
    const Dataset& data, std::span<const int> fit_on) {
  if (fit_on.empty()) throw DataError("normalize: empty fit set");
  NormalizationParams params;
  params.ranges.resize(static_cast<std::size_t>(data.cols()));
  for (int j = 0; j < data.cols(); ++j) {
    auto& r = params.ranges[static_cast<std::size_t>(j)];
    if (data.spec(j).kind == FeatureKind::binary) {
      r = {0.0, 1.0};
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int row : fit_on) {
      const double v = data.feature(row, j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    r = {lo, hi};
  }

  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(data.rows()) *
                   static_cast<std::size_t>(data.cols()));
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.cols(); ++j) {
      const double v = data.feature(i, j);
      if (data.spec(j).kind == FeatureKind::binary) {
        features.push_back(v);
      } else {
        features.push_back(
            detail::apply_range(v, params.ranges[static_cast<std::size_t>(j)]));
      }
    }
  }
  Dataset out(std::move(features), data.labels(), data.specs(),
              data.label_kind());
  return {std::move(out), std::move(params)};
}

/// Maps a dataset through previously fitted parameters (test-time path).
inline Dataset apply_normalization(const Dataset& data,
                                   const NormalizationParams& params) {
  if (params.ranges.size() != static_cast<std::size_t>(data.cols()))
    throw DataError("normalization parameters do not match feature count");
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(data.rows()) *
                   static_cast<std::size_t>(data.cols()));
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.cols(); ++j) {
      const double v = data.feature(i, j);
      if (data.spec(j).kind == FeatureKind::binary) {
        features.push_back(v);
      } else {
        features.push_back(
            detail::apply_range(v, params.ranges[static_cast<std::size_t>(j)]));
      }
    }
  }
  return Dataset(std::move(features), data.labels(), data.specs(),
                 data.label_kind());
}

/// Normalizes a single raw feature vector in place.
inline void normalize_row(std::span<const FeatureSpec> specs,
                          const NormalizationParams& params,
                          std::span<double> x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (specs[j].kind == FeatureKind::binary) continue;
    x[j] = detail::apply_range(x[j], params.ranges[j]);
  }
}

/// Seeded shuffle of the given rows, then contiguous cuts at floor(r0*N) and
/// floor((r0+r1)*N). All three parts must come out non-empty.
inline Partition split_partition(std::span<const int> rows,
                                 std::array<double, 3> ratios,
                                 std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] < 0.0 || ratios[1] < 0.0 || ratios[2] < 0.0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("partition ratios must be non-negative and sum to 1");

  const int n = static_cast<int>(rows.size());
  std::vector<int> order(rows.begin(), rows.end());
  SplitMix64 rng(derive_seed(seed, {fnv1a64("partition")}));
  rng.shuffle(order);

  const int cut1 = static_cast<int>(std::floor(ratios[0] * n + 1e-9));
  const int cut2 =
      static_cast<int>(std::floor((ratios[0] + ratios[1]) * n + 1e-9));
  Partition part;
  part.s.assign(order.begin(), order.begin() + cut1);
  part.v1.assign(order.begin() + cut1, order.begin() + cut2);
  part.v2.assign(order.begin() + cut2, order.end());
  if (part.s.empty() || part.v1.empty() || part.v2.empty())
    throw ConfigError("each partition part must be non-empty (N=" +
                      std::to_string(n) + ")");
  std::sort(part.s.begin(), part.s.end());
  std::sort(part.v1.begin(), part.v1.end());
  std::sort(part.v2.begin(), part.v2.end());
  return part;
}

inline Partition split_partition(const Dataset& data,
                                 std::array<double, 3> ratios,
                                 std::uint64_t seed) {
  std::vector<int> all(static_cast<std::size_t>(data.rows()));
  std::iota(all.begin(), all.end(), 0);
  return split_partition(std::span<const int>(all), ratios, seed);
}

/// Rows whose feature vectors lie inside the cell. Empty results are legal.
inline std::vector<int> restrict_rows(std::span<const int> rows,
                                      const Dataset& data, const Cell& cell) {
  std::vector<int> out;
  for (int r : rows) {
    if (cell.contains(data.row(r))) out.push_back(r);
  }
  return out;
}

}  // namespace tops

#endif  // TOPS_DATASET_HPP
