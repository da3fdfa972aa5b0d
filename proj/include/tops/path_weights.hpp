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

#ifndef TOPS_PATH_WEIGHTS_HPP
#define TOPS_PATH_WEIGHTS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tops/dataset.hpp"
#include "tops/errors.hpp"
#include "tops/losses.hpp"
#include "tops/parallel.hpp"
#include "tops/tree_growth.hpp"

namespace tops {

/// Per-terminal aggregation weights over the root-to-terminal path. Weights
/// live on the probability simplex, and the same node may carry different
/// weights on different paths.
struct PathWeights {
  struct Entry {
    int terminal = 0;
    std::vector<int> path;  // root..terminal
    std::vector<double> w;  // same length as path
  };
  std::vector<Entry> entries;  // sorted by terminal id

  const Entry* find(int terminal) const {
    for (const auto& e : entries) {
      if (e.terminal == terminal) return &e;
    }
    return nullptr;
  }
};

enum class WeightFitMode { squared_error, configured_loss_gridsearch };

inline std::string weight_fit_mode_name(WeightFitMode m) {
  return m == WeightFitMode::squared_error ? "squared_error"
                                           : "configured_loss_gridsearch";
}

inline WeightFitMode parse_weight_fit_mode(const std::string& name) {
  if (name == "squared_error") return WeightFitMode::squared_error;
  if (name == "configured_loss_gridsearch")
    return WeightFitMode::configured_loss_gridsearch;
  throw ConfigError("unknown weight_fit mode '" + name + "'");
}

struct WeightFitOptions {
  WeightFitMode mode = WeightFitMode::squared_error;
  int max_iters = 1000;
  double grad_tol = 1e-8;
  int jobs = 1;
};

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_to_simplex(std::vector<double> v) {
  const int k = static_cast<int>(v.size());
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (int j = 0; j < k; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / (j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

namespace detail {

/// Mean squared error of the weighted combination.
inline double simplex_objective(
    const std::vector<std::vector<double>>& node_scores,
    std::span<const double> labels, std::span<const double> w) {
  const std::size_t n = labels.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
      pred += w[k] * node_scores[k][i];
    const double d = pred - labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(n);
}

/// Enumerates w on the simplex grid with the given number of steps, calling
/// visit(w) for each point in lexicographic order.
inline void for_each_grid_point(
    int k, int steps, const std::function<void(std::span<const double>)>& visit) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  std::vector<double> w(static_cast<std::size_t>(k));
  std::function<void(int, int)> rec = [&](int idx, int remaining) {
    if (idx == k - 1) {
      counts[static_cast<std::size_t>(idx)] = remaining;
      for (int j = 0; j < k; ++j)
        w[static_cast<std::size_t>(j)] =
            static_cast<double>(counts[static_cast<std::size_t>(j)]) / steps;
      visit(w);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(idx)] = c;
      rec(idx + 1, remaining - c);
    }
  };
  rec(0, steps);
}

}  // namespace detail

/// Simplex-constrained least squares on the path's node scores: projected
/// gradient descent from the uniform start with backtracking line search.
/// node_scores[k][i] is node k's prediction for validation point i.
inline std::vector<double> fit_simplex_weights(
    const std::vector<std::vector<double>>& node_scores,
    std::span<const double> labels, const WeightFitOptions& options = {}) {
  const int k = static_cast<int>(node_scores.size());
  if (k == 0) throw Error("fit_simplex_weights: empty path");
  std::vector<double> w(static_cast<std::size_t>(k),
                        1.0 / static_cast<double>(k));
  if (k == 1 || labels.empty()) return w;

  const std::size_t n = labels.size();
  double fw = detail::simplex_objective(node_scores, labels, w);
  double step = 1.0;

  std::vector<double> residual(n);
  std::vector<double> grad(static_cast<std::size_t>(k));
  for (int iter = 0; iter < options.max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double pred = 0.0;
      for (int j = 0; j < k; ++j)
        pred += w[static_cast<std::size_t>(j)] *
                node_scores[static_cast<std::size_t>(j)][i];
      residual[i] = pred - labels[i];
    }
    for (int j = 0; j < k; ++j) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        g += node_scores[static_cast<std::size_t>(j)][i] * residual[i];
      grad[static_cast<std::size_t>(j)] = 2.0 * g / static_cast<double>(n);
    }

    step *= 2.0;  // allow the step to grow back after conservative iterations
    std::vector<double> next;
    double f_next = 0.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      std::vector<double> trial(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j)
        trial[static_cast<std::size_t>(j)] =
            w[static_cast<std::size_t>(j)] -
            step * grad[static_cast<std::size_t>(j)];
      trial = project_to_simplex(std::move(trial));
      const double f_trial =
          detail::simplex_objective(node_scores, labels, trial);
      // Sufficient decrease for the projected step.
      double dot = 0.0;
      double dist2 = 0.0;
      for (int j = 0; j < k; ++j) {
        const double d = trial[static_cast<std::size_t>(j)] -
                         w[static_cast<std::size_t>(j)];
        dot += grad[static_cast<std::size_t>(j)] * d;
        dist2 += d * d;
      }
      if (f_trial <= fw + dot + dist2 / (2.0 * step) + 1e-15) {
        next = std::move(trial);
        f_next = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    double move = 0.0;
    for (int j = 0; j < k; ++j)
      move += (next[static_cast<std::size_t>(j)] -
               w[static_cast<std::size_t>(j)]) *
              (next[static_cast<std::size_t>(j)] -
               w[static_cast<std::size_t>(j)]);
    w = std::move(next);
    fw = f_next;
    if (std::sqrt(move) / step <= options.grad_tol) break;
  }
  return w;
}

/// Grid-search alternative that minimizes the configured loss directly.
/// The grid step adapts to the path length to keep enumeration bounded.
inline std::vector<double> fit_weights_gridsearch(
    const std::vector<std::vector<double>>& node_scores,
    std::span<const double> labels, const LossSpec& loss_spec) {
  const int k = static_cast<int>(node_scores.size());
  std::vector<double> best(static_cast<std::size_t>(k),
                           1.0 / static_cast<double>(k));
  if (k == 1 || labels.empty()) return best;

  int steps = 100;
  if (k == 4) steps = 50;
  if (k == 5) steps = 20;
  if (k > 5) steps = 10;

  const std::size_t n = labels.size();
  ScoredSet scored;
  scored.labels.assign(labels.begin(), labels.end());
  scored.scores.resize(n);

  double best_loss = std::numeric_limits<double>::infinity();
  bool found = false;
  detail::for_each_grid_point(k, steps, [&](std::span<const double> w) {
    for (std::size_t i = 0; i < n; ++i) {
      double pred = 0.0;
      for (int j = 0; j < k; ++j)
        pred += w[static_cast<std::size_t>(j)] *
                node_scores[static_cast<std::size_t>(j)][i];
      scored.scores[i] = pred;
    }
    double l;
    try {
      l = loss(loss_spec, scored);
    } catch (const AucUndefinedError&) {
      return;  // undefined everywhere on this terminal; fallback below
    }
    if (l < best_loss) {
      best_loss = l;
      best.assign(w.begin(), w.end());
      found = true;
    }
  });
  if (!found)
    return fit_simplex_weights(node_scores, labels, WeightFitOptions{});
  return best;
}

/// Fits per-terminal path weights on the second validation set. Weight
/// selection minimizes squared error of the weighted prediction (the
/// gridsearch mode minimizes the configured loss instead); terminals with no
/// validation rows fall back to uniform weights.
inline PathWeights optimize_weights(const TreeOfPredictors& tree,
                                    const Dataset& data,
                                    std::span<const int> v2_rows,
                                    const LossSpec& loss_spec,
                                    const WeightFitOptions& options = {}) {
  const auto terminals = tree.terminal_ids();
  PathWeights out;
  out.entries.resize(terminals.size());

  parallel_for(static_cast<int>(terminals.size()), options.jobs, [&](int t) {
    const int terminal = terminals[static_cast<std::size_t>(t)];
    PathWeights::Entry entry;
    entry.terminal = terminal;
    entry.path = tree.path_to(terminal);
    const auto rows = restrict_rows(v2_rows, data, tree.node(terminal).cell);

    const std::size_t k = entry.path.size();
    if (rows.empty()) {
      entry.w.assign(k, 1.0 / static_cast<double>(k));
    } else {
      std::vector<std::vector<double>> node_scores(k);
      for (std::size_t p = 0; p < k; ++p) {
        const auto& pred = *tree.node(entry.path[p]).predictor;
        node_scores[p].reserve(rows.size());
        for (int r : rows) node_scores[p].push_back(pred.score(data.row(r)));
      }
      std::vector<double> labels;
      labels.reserve(rows.size());
      for (int r : rows) labels.push_back(data.label(r));

      if (options.mode == WeightFitMode::configured_loss_gridsearch) {
        entry.w = fit_weights_gridsearch(node_scores, labels, loss_spec);
      } else {
        entry.w = fit_simplex_weights(node_scores, labels, options);
      }
    }
    out.entries[static_cast<std::size_t>(t)] = std::move(entry);
  });

  std::sort(out.entries.begin(), out.entries.end(),
            [](const PathWeights::Entry& a, const PathWeights::Entry& b) {
              return a.terminal < b.terminal;
            });
  return out;
}

}  // namespace tops

#endif  // TOPS_PATH_WEIGHTS_HPP
