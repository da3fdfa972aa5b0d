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

#ifndef TOPS_BOUNDS_HPP
#define TOPS_BOUNDS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tops/dataset.hpp"
#include "tops/errors.hpp"
#include "tops/inference.hpp"
#include "tops/learners.hpp"
#include "tops/losses.hpp"
#include "tops/random.hpp"
#include "tops/tree_growth.hpp"

namespace tops {

/// Monte-Carlo estimate of the empirical Rademacher complexity of a learner
/// on a sample. The supremum over the hypothesis class is approximated by
/// fitting the learner against sign-aligned pseudo-targets: points with
/// sigma=+1 get their label flipped (binary labels) or reflected across the
/// sample mean (real labels), so a good fit makes the sign-weighted loss sum
/// large. This is a heuristic, not a certificate.
inline double rademacher_estimate(const AlgorithmSpec& spec,
                                  const Dataset& data,
                                  std::span<const int> rows,
                                  const LossSpec& basis_loss, int n_draws,
                                  std::uint64_t seed,
                                  int min_train_samples = 2) {
  if (n_draws < 1) throw ConfigError("rademacher_estimate: n_draws must be >= 1");
  if (rows.empty()) return 0.0;
  if (basis_loss.kind == LossKind::one_minus_auc)
    throw ConfigError(
        "rademacher_estimate needs an additive per-point loss basis");

  bool binary_labels = true;
  double label_sum = 0.0;
  for (int r : rows) {
    const double y = data.label(r);
    label_sum += y;
    if (y != 0.0 && y != 1.0) binary_labels = false;
  }
  const double label_mean = label_sum / static_cast<double>(rows.size());
  const bool flip_style = binary_labels && is_classification_loss(basis_loss.kind);

  double total = 0.0;
  std::vector<double> pseudo(static_cast<std::size_t>(data.rows()), 0.0);
  std::vector<int> sigma(rows.size());
  for (int d = 0; d < n_draws; ++d) {
    SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(d)}));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      sigma[i] = (rng.next() & 1ULL) ? 1 : -1;
      const int r = rows[i];
      const double y = data.label(r);
      double target = y;
      if (sigma[i] > 0) target = flip_style ? 1.0 - y : 2.0 * label_mean - y;
      pseudo[static_cast<std::size_t>(r)] = target;
    }
    const auto predictor =
        train(spec, data, rows,
              derive_seed(seed, {static_cast<std::uint64_t>(d), 1}),
              min_train_samples, &pseudo);
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int r = rows[i];
      const double point_loss = detail::per_point_loss(
          basis_loss.kind, predictor.score(data.row(r)), data.label(r));
      sum += sigma[i] * point_loss;
    }
    total += sum / static_cast<double>(rows.size());
  }
  return std::max(0.0, total / static_cast<double>(n_draws));
}

/// Per-terminal loss bound: L + 2R + 4*sqrt(2*ln(4/delta)/m).
inline double theorem1_bound(double empirical_loss, double max_path_rademacher,
                             long long m, double delta) {
  if (m < 1) throw ConfigError("theorem1_bound: m must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("theorem1_bound: delta must be in (0,1)");
  return empirical_loss + 2.0 * max_path_rademacher +
         4.0 * std::sqrt(2.0 * std::log(4.0 / delta) /
                         static_cast<double>(m));
}

/// Sample-weighted aggregate of the per-terminal bounds, with the confidence
/// term widened by the number of terminals inside the logarithm.
inline double corollary_bound(
    std::span<const std::tuple<long long, double, double>> per_terminal,
    double delta) {
  if (per_terminal.empty())
    throw ConfigError("corollary_bound: need at least one terminal");
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("corollary_bound: delta must be in (0,1)");
  const double t_count = static_cast<double>(per_terminal.size());
  long long n = 0;
  for (const auto& [m, l, r] : per_terminal) {
    if (m < 1) throw ConfigError("corollary_bound: terminal sample count < 1");
    n += m;
  }
  double sum = 0.0;
  for (const auto& [m, l, r] : per_terminal) {
    const double conf = 4.0 * std::sqrt(2.0 * std::log(4.0 * t_count / delta) /
                                        static_cast<double>(m));
    sum += static_cast<double>(m) * (l + 2.0 * r + conf);
  }
  return sum / static_cast<double>(n);
}

struct TerminalBound {
  int terminal = 0;
  long long s_count = 0;
  double empirical_loss = 0.0;
  double max_path_rademacher = 0.0;
  double confidence_term = 0.0;
  double bound = 0.0;
  bool included = true;  // false: too few training rows to estimate
};

struct BoundReport {
  double delta = 0.05;
  int n_draws = 0;
  std::string loss_basis;  // "configured" or "zero_one_surrogate"
  std::string note = "estimate, not certificate";
  std::vector<TerminalBound> terminals;
  double aggregate_bound = 0.0;
  bool aggregate_valid = false;
};

/// Evaluates the per-terminal and aggregate bounds for a trained model on its
/// (normalized) training rows. When the configured loss is 1-AUC the bounds
/// use the 0-1 loss surrogate, since the bound formulas assume per-point
/// additive losses.
inline BoundReport evaluate_bounds(const OverallPredictor& model,
                                   const Dataset& normalized_data,
                                   std::span<const int> s_rows, double delta,
                                   int n_draws, std::uint64_t seed) {
  BoundReport report;
  report.delta = delta;
  report.n_draws = n_draws;

  LossSpec basis = model.loss;
  if (!model.loss.additive) {
    basis = LossSpec::of(LossKind::error_rate);
    report.loss_basis = "zero_one_surrogate";
  } else {
    report.loss_basis = "configured";
  }

  auto algorithm_by_id = [&](const std::string& id) -> const AlgorithmSpec* {
    for (const auto& a : model.algorithms) {
      if (a.id == id) return &a;
    }
    return nullptr;
  };

  std::vector<std::tuple<long long, double, double>> included;
  for (int terminal : model.tree.terminal_ids()) {
    TerminalBound tb;
    tb.terminal = terminal;
    const auto rows =
        restrict_rows(s_rows, normalized_data, model.tree.node(terminal).cell);
    tb.s_count = static_cast<long long>(rows.size());
    if (rows.empty()) {
      tb.included = false;
      report.terminals.push_back(tb);
      continue;
    }

    const auto* entry = model.weights.find(terminal);
    ScoredSet scored;
    for (int r : rows) {
      double pred = 0.0;
      for (std::size_t k = 0; k < entry->path.size(); ++k)
        pred += entry->w[k] * model.tree.node(entry->path[k])
                                  .predictor->score(normalized_data.row(r));
      scored.append(pred, normalized_data.label(r));
    }
    tb.empirical_loss = loss(basis, scored);

    try {
      double max_r = 0.0;
      for (int node_id : entry->path) {
        const auto* spec =
            algorithm_by_id(model.tree.node(node_id).predictor->algorithm);
        if (!spec) throw TrainError("unknown algorithm id in model");
        const double r = rademacher_estimate(
            *spec, normalized_data, rows, basis, n_draws,
            derive_seed(seed, {static_cast<std::uint64_t>(terminal),
                               static_cast<std::uint64_t>(node_id)}));
        max_r = std::max(max_r, r);
      }
      tb.max_path_rademacher = max_r;
    } catch (const TrainError&) {
      tb.included = false;
      report.terminals.push_back(tb);
      continue;
    }

    tb.confidence_term = 4.0 * std::sqrt(2.0 * std::log(4.0 / delta) /
                                         static_cast<double>(tb.s_count));
    tb.bound = theorem1_bound(tb.empirical_loss, tb.max_path_rademacher,
                              tb.s_count, delta);
    report.terminals.push_back(tb);
    included.emplace_back(tb.s_count, tb.empirical_loss,
                          tb.max_path_rademacher);
  }

  if (!included.empty()) {
    report.aggregate_bound = corollary_bound(included, delta);
    report.aggregate_valid = true;
  }
  return report;
}

}  // namespace tops

#endif  // TOPS_BOUNDS_HPP
