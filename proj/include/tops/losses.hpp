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

#ifndef TOPS_LOSSES_HPP
#define TOPS_LOSSES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "tops/errors.hpp"

namespace tops {

enum class LossKind { error_rate, one_minus_auc, mae, mse };

/// Loss descriptor. The additive flag is derived from the kind: 1-AUC is the
/// only built-in loss that is not a sample mean of per-point losses.
struct LossSpec {
  LossKind kind = LossKind::mse;
  bool additive = true;

  static LossSpec of(LossKind k) {
    return LossSpec{k, k != LossKind::one_minus_auc};
  }
};

inline std::string loss_name(LossKind k) {
  switch (k) {
    case LossKind::error_rate:
      return "error";
    case LossKind::one_minus_auc:
      return "auc";
    case LossKind::mae:
      return "mae";
    case LossKind::mse:
      return "mse";
  }
  return "?";
}

inline LossSpec parse_loss(const std::string& name) {
  if (name == "error") return LossSpec::of(LossKind::error_rate);
  if (name == "auc") return LossSpec::of(LossKind::one_minus_auc);
  if (name == "mae") return LossSpec::of(LossKind::mae);
  if (name == "mse") return LossSpec::of(LossKind::mse);
  throw ConfigError("unknown loss '" + name + "' (expected error|auc|mae|mse)");
}

inline bool is_classification_loss(LossKind k) {
  return k == LossKind::error_rate || k == LossKind::one_minus_auc;
}

/// Predictions paired with their true labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<double> labels;

  std::size_t size() const { return scores.size(); }
  void append(double score, double label) {
    scores.push_back(score);
    labels.push_back(label);
  }
};

/// Joint sets are evaluated on the concatenation of their parts, never by
/// combining per-part losses.
inline ScoredSet concat(const ScoredSet& a, const ScoredSet& b) {
  ScoredSet out = a;
  out.scores.insert(out.scores.end(), b.scores.begin(), b.scores.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

/// Classification threshold; a score of exactly 0.5 predicts class 1, the
/// same >= convention used for splits.
inline int threshold_class(double score) { return score >= 0.5 ? 1 : 0; }

namespace detail {

inline void check_binary_labels(const ScoredSet& s) {
  for (double y : s.labels) {
    if (y != 0.0 && y != 1.0)
      throw DataError("classification loss requires labels in {0,1}");
  }
}

/// Rank-based Mann-Whitney pair count in half-credit units: a correctly
/// ordered (negative, positive) pair scores 2, a tie scores 1. Integer
/// accumulation keeps the result exactly equal to brute-force pair counting.
inline long long auc_half_credits(const ScoredSet& s, long long& n_pos,
                                  long long& n_neg) {
  const std::size_t n = s.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return s.scores[static_cast<std::size_t>(a)] <
           s.scores[static_cast<std::size_t>(b)];
  });

  n_pos = 0;
  n_neg = 0;
  for (double y : s.labels) (y == 1.0 ? n_pos : n_neg)++;

  long long credits = 0;
  long long negatives_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    long long group_pos = 0;
    long long group_neg = 0;
    const double v = s.scores[static_cast<std::size_t>(order[i])];
    while (j < n && s.scores[static_cast<std::size_t>(order[j])] == v) {
      (s.labels[static_cast<std::size_t>(order[j])] == 1.0 ? group_pos
                                                           : group_neg)++;
      ++j;
    }
    credits += group_pos * (2 * negatives_below + group_neg);
    negatives_below += group_neg;
    i = j;
  }
  return credits;
}

}  // namespace detail

/// Mann-Whitney AUC with ties counted as half a pair. Throws
/// AucUndefinedError when only one class is present.
inline double auc(const ScoredSet& scored) {
  detail::check_binary_labels(scored);
  long long n_pos = 0;
  long long n_neg = 0;
  const long long credits = detail::auc_half_credits(scored, n_pos, n_neg);
  if (n_pos == 0 || n_neg == 0)
    throw AucUndefinedError("AUC undefined: labels contain a single class");
  return static_cast<double>(credits) /
         (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double loss(const LossSpec& spec, const ScoredSet& scored) {
  if (scored.size() == 0) throw DataError("loss of an empty set is undefined");
  const std::size_t n = scored.size();
  switch (spec.kind) {
    case LossKind::error_rate: {
      detail::check_binary_labels(scored);
      long long wrong = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (threshold_class(scored.scores[i]) !=
            static_cast<int>(scored.labels[i]))
          ++wrong;
      }
      return static_cast<double>(wrong) / static_cast<double>(n);
    }
    case LossKind::mae: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sum += std::abs(scored.scores[i] - scored.labels[i]);
      return sum / static_cast<double>(n);
    }
    case LossKind::mse: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = scored.scores[i] - scored.labels[i];
        sum += d * d;
      }
      return sum / static_cast<double>(n);
    }
    case LossKind::one_minus_auc:
      return 1.0 - auc(scored);
  }
  throw Error("unreachable loss kind");
}

}  // namespace tops

#endif  // TOPS_LOSSES_HPP
