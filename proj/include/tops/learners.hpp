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

#ifndef TOPS_LEARNERS_HPP
#define TOPS_LEARNERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tops/dataset.hpp"
#include "tops/errors.hpp"
#include "tops/linalg.hpp"
#include "tops/random.hpp"

namespace tops {

enum class LearnerKind {
  linear_regression,
  logistic_regression,
  stump,
  tree,
  adaboost,
  random_forest,
};

inline std::string learner_kind_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::linear_regression:
      return "linear_regression";
    case LearnerKind::logistic_regression:
      return "logistic_regression";
    case LearnerKind::stump:
      return "stump";
    case LearnerKind::tree:
      return "tree";
    case LearnerKind::adaboost:
      return "adaboost";
    case LearnerKind::random_forest:
      return "random_forest";
  }
  return "?";
}

inline LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "linear_regression") return LearnerKind::linear_regression;
  if (name == "logistic_regression") return LearnerKind::logistic_regression;
  if (name == "stump") return LearnerKind::stump;
  if (name == "tree") return LearnerKind::tree;
  if (name == "adaboost") return LearnerKind::adaboost;
  if (name == "random_forest") return LearnerKind::random_forest;
  throw ConfigError("unknown learner kind '" + name + "'");
}

/// A base learner together with its hyperparameters. Two specs that differ in
/// any hyperparameter are distinct algorithms.
struct AlgorithmSpec {
  std::string id;
  LearnerKind kind = LearnerKind::linear_regression;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

// ---------------------------------------------------------------------------
// Trained model states
// ---------------------------------------------------------------------------

struct LinearModel {
  std::vector<double> coef;  // [intercept, w_0, ..., w_{d-1}]

  double score(std::span<const double> x) const {
    double v = coef[0];
    for (std::size_t j = 0; j < x.size(); ++j) v += coef[j + 1] * x[j];
    return v;
  }
};

struct LogisticModel {
  std::vector<double> coef;

  double score(std::span<const double> x) const {
    double eta = coef[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coef[j + 1] * x[j];
    eta = std::clamp(eta, -30.0, 30.0);
    return 1.0 / (1.0 + std::exp(-eta));
  }
};

/// Piecewise-constant regression tree; also the representation of a stump
/// (depth 1) and of each member of a forest.
struct RegressionTreeModel {
  struct Node {
    bool leaf = true;
    double value = 0.0;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
  };
  std::vector<Node> nodes;  // node 0 is the root

  double score(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].leaf) {
      const Node& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                               : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
};

struct ForestModel {
  std::vector<RegressionTreeModel> trees;

  double score(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.score(x);
    return sum / static_cast<double>(trees.size());
  }
};

/// Discrete boosting over +-1 stumps (plus the two constant classifiers).
/// The score is the normalized vote margin mapped into [0,1], so the usual
/// sign rule becomes thresholding at 0.5.
struct AdaBoostModel {
  struct Round {
    bool constant = false;
    int constant_vote = 1;  // +-1 when constant
    int feature = -1;
    double threshold = 0.0;
    int polarity = 1;  // vote = polarity * (x_f >= threshold ? +1 : -1)
    double alpha = 0.0;
  };
  std::vector<Round> rounds;
  double alpha_sum = 0.0;

  static int vote(const Round& r, std::span<const double> x) {
    if (r.constant) return r.constant_vote;
    const int raw = x[static_cast<std::size_t>(r.feature)] >= r.threshold ? 1 : -1;
    return r.polarity * raw;
  }

  double score(std::span<const double> x) const {
    if (rounds.empty() || alpha_sum <= 0.0) return 0.5;
    double margin = 0.0;
    for (const auto& r : rounds) margin += r.alpha * vote(r, x);
    return 0.5 * (margin / alpha_sum + 1.0);
  }
};

/// Stagewise logistic boosting on regression stumps (the "adaboost with
/// logistic weighting" variant). Each round is fit by weighted least squares
/// to the logistic working response.
struct LogitBoostModel {
  struct Round {
    bool constant = false;
    double value = 0.0;
    int feature = -1;
    double threshold = 0.0;
    double left_value = 0.0;
    double right_value = 0.0;

    double eval(std::span<const double> x) const {
      if (constant) return value;
      return x[static_cast<std::size_t>(feature)] < threshold ? left_value
                                                              : right_value;
    }
  };
  std::vector<Round> rounds;

  double score(std::span<const double> x) const {
    double f2 = 0.0;  // 2F(x); each round contributes 0.5*f, doubled here
    for (const auto& r : rounds) f2 += r.eval(x);
    f2 = std::clamp(f2, -30.0, 30.0);
    return 1.0 / (1.0 + std::exp(-f2));
  }
};

using ModelState = std::variant<LinearModel, LogisticModel, RegressionTreeModel,
                                ForestModel, AdaBoostModel, LogitBoostModel>;

/// A trained predictor: scores any feature vector in [0,1]^d.
struct Predictor {
  std::string algorithm;  // AlgorithmSpec id
  int trained_on = -1;    // node id of the training cell C*
  int dims = 0;
  ModelState state;

  double score(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dims)
      throw DataError("score: expected " + std::to_string(dims) +
                      " features, got " + std::to_string(x.size()));
    return std::visit([&](const auto& m) { return m.score(x); }, state);
  }
};

namespace detail {

/// Positional view over selected dataset rows; targets may be overridden by
/// global row id (boosting residuals and sign-weighted pseudo-targets use
/// this instead of copying the dataset).
struct SampleView {
  const Dataset* data = nullptr;
  std::span<const int> rows;
  const std::vector<double>* target_override = nullptr;

  int size() const { return static_cast<int>(rows.size()); }
  int dims() const { return data->cols(); }
  double x(int k, int j) const {
    return data->feature(rows[static_cast<std::size_t>(k)], j);
  }
  double y(int k) const {
    const int r = rows[static_cast<std::size_t>(k)];
    return target_override ? (*target_override)[static_cast<std::size_t>(r)]
                           : data->label(r);
  }
};

struct StumpSplit {
  int feature = -1;
  double threshold = 0.0;
  double left_value = 0.0;
  double right_value = 0.0;
  double sse = 0.0;
};

/// Best weighted squared-error stump over the given positions and features.
/// Thresholds sit on distinct values with the (<, >=) convention; ties break
/// toward the lowest feature, then the lowest threshold. Returns nullopt when
/// no feature splits properly.
inline std::optional<StumpSplit> best_stump_split(
    const SampleView& view, std::span<const int> positions,
    std::span<const double> targets, const double* weights,
    std::span<const int> features, int min_leaf) {
  const int n = static_cast<int>(positions.size());
  std::optional<StumpSplit> best;

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int f : features) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return view.x(positions[static_cast<std::size_t>(a)], f) <
             view.x(positions[static_cast<std::size_t>(b)], f);
    });

    double total_w = 0.0, total_wy = 0.0, total_wyy = 0.0;
    for (int k = 0; k < n; ++k) {
      const int p = positions[static_cast<std::size_t>(k)];
      const double w = weights ? weights[static_cast<std::size_t>(p)] : 1.0;
      const double y = targets[static_cast<std::size_t>(p)];
      total_w += w;
      total_wy += w * y;
      total_wyy += w * y * y;
    }
    if (!(total_w > 0.0)) continue;

    double lw = 0.0, lwy = 0.0, lwyy = 0.0;
    int on_left = 0;
    for (int k = 0; k < n - 1; ++k) {
      const int p = positions[static_cast<std::size_t>(order[k])];
      const double w = weights ? weights[static_cast<std::size_t>(p)] : 1.0;
      const double y = targets[static_cast<std::size_t>(p)];
      lw += w;
      lwy += w * y;
      lwyy += w * y * y;
      ++on_left;
      const double v = view.x(positions[static_cast<std::size_t>(order[k])], f);
      const double v_next =
          view.x(positions[static_cast<std::size_t>(order[k + 1])], f);
      if (v == v_next) continue;
      if (on_left < min_leaf || n - on_left < min_leaf) continue;
      const double rw = total_w - lw;
      if (!(lw > 0.0) || !(rw > 0.0)) continue;
      const double lmean = lwy / lw;
      const double rmean = (total_wy - lwy) / rw;
      const double sse = (lwyy - lw * lmean * lmean) +
                         ((total_wyy - lwyy) - rw * rmean * rmean);
      if (!best || sse < best->sse) {
        best = StumpSplit{f, v_next, lmean, rmean, sse};
      }
    }
  }
  return best;
}

inline double weighted_mean(std::span<const int> positions,
                            std::span<const double> targets,
                            const double* weights) {
  double sw = 0.0, swy = 0.0;
  for (int p : positions) {
    const double w = weights ? weights[static_cast<std::size_t>(p)] : 1.0;
    sw += w;
    swy += w * targets[static_cast<std::size_t>(p)];
  }
  return sw > 0.0 ? swy / sw : 0.0;
}

struct TreeFitConfig {
  int max_depth = 3;
  int min_leaf = 1;
  int mtry = 0;  // 0 = all features
  SplitMix64* rng = nullptr;
};

inline int grow_tree_node(RegressionTreeModel& model, const SampleView& view,
                          std::vector<int>& positions,
                          std::span<const double> targets,
                          const TreeFitConfig& cfg, int depth) {
  const int id = static_cast<int>(model.nodes.size());
  model.nodes.emplace_back();
  model.nodes.back().value = weighted_mean(positions, targets, nullptr);

  if (depth >= cfg.max_depth ||
      static_cast<int>(positions.size()) < 2 * cfg.min_leaf)
    return id;

  std::vector<int> features(static_cast<std::size_t>(view.dims()));
  std::iota(features.begin(), features.end(), 0);
  if (cfg.mtry > 0 && cfg.mtry < view.dims() && cfg.rng) {
    // Partial Fisher-Yates, then sorted so the tie-break stays by index.
    for (int k = 0; k < cfg.mtry; ++k) {
      const int j = k + static_cast<int>(cfg.rng->below(
                            static_cast<std::uint64_t>(view.dims() - k)));
      std::swap(features[static_cast<std::size_t>(k)],
                features[static_cast<std::size_t>(j)]);
    }
    features.resize(static_cast<std::size_t>(cfg.mtry));
    std::sort(features.begin(), features.end());
  }

  const auto split =
      best_stump_split(view, positions, targets, nullptr, features, cfg.min_leaf);
  if (!split) return id;

  // Reject zero-gain splits so constant regions stay leaves.
  double sw = 0.0, swy = 0.0, swyy = 0.0;
  for (int p : positions) {
    const double y = targets[static_cast<std::size_t>(p)];
    sw += 1.0;
    swy += y;
    swyy += y * y;
  }
  const double node_sse = swyy - swy * swy / sw;
  if (!(split->sse < node_sse - 1e-12)) return id;

  std::vector<int> left, right;
  left.reserve(positions.size());
  right.reserve(positions.size());
  for (int p : positions) {
    if (view.x(p, split->feature) < split->threshold)
      left.push_back(p);
    else
      right.push_back(p);
  }
  if (left.empty() || right.empty()) return id;
  positions.clear();
  positions.shrink_to_fit();

  const int left_id = grow_tree_node(model, view, left, targets, cfg, depth + 1);
  const int right_id =
      grow_tree_node(model, view, right, targets, cfg, depth + 1);
  auto& node = model.nodes[static_cast<std::size_t>(id)];
  node.leaf = false;
  node.feature = split->feature;
  node.threshold = split->threshold;
  node.left = left_id;
  node.right = right_id;
  return id;
}

inline RegressionTreeModel fit_regression_tree(const SampleView& view,
                                               std::span<const double> targets,
                                               const TreeFitConfig& cfg) {
  RegressionTreeModel model;
  std::vector<int> positions(static_cast<std::size_t>(view.size()));
  std::iota(positions.begin(), positions.end(), 0);
  grow_tree_node(model, view, positions, targets, cfg, 0);
  return model;
}

inline std::vector<double> positional_targets(const SampleView& view) {
  std::vector<double> t(static_cast<std::size_t>(view.size()));
  for (int k = 0; k < view.size(); ++k) t[static_cast<std::size_t>(k)] = view.y(k);
  return t;
}

// -- linear / logistic ------------------------------------------------------

inline LinearModel fit_linear(const SampleView& view, double ridge_eps) {
  const int p = view.dims() + 1;
  std::vector<double> xtx(static_cast<std::size_t>(p) * p, 0.0);
  std::vector<double> xty(static_cast<std::size_t>(p), 0.0);
  std::vector<double> xrow(static_cast<std::size_t>(p));
  for (int k = 0; k < view.size(); ++k) {
    xrow[0] = 1.0;
    for (int j = 0; j < view.dims(); ++j)
      xrow[static_cast<std::size_t>(j + 1)] = view.x(k, j);
    const double y = view.y(k);
    for (int a = 0; a < p; ++a) {
      xty[static_cast<std::size_t>(a)] += xrow[static_cast<std::size_t>(a)] * y;
      for (int b = a; b < p; ++b)
        xtx[static_cast<std::size_t>(a) * p + b] +=
            xrow[static_cast<std::size_t>(a)] * xrow[static_cast<std::size_t>(b)];
    }
  }
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < a; ++b)
      xtx[static_cast<std::size_t>(a) * p + b] =
          xtx[static_cast<std::size_t>(b) * p + a];
  LinearModel model;
  model.coef = solve_normal_equations(xtx, p, xty, ridge_eps);
  return model;
}

inline LogisticModel fit_logistic(const SampleView& view, int max_iters,
                                  double tol, double ridge_eps) {
  const int p = view.dims() + 1;
  std::vector<double> beta(static_cast<std::size_t>(p), 0.0);
  std::vector<double> xtx(static_cast<std::size_t>(p) * p);
  std::vector<double> grad(static_cast<std::size_t>(p));
  std::vector<double> xrow(static_cast<std::size_t>(p));

  for (int iter = 0; iter < max_iters; ++iter) {
    std::fill(xtx.begin(), xtx.end(), 0.0);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int k = 0; k < view.size(); ++k) {
      xrow[0] = 1.0;
      for (int j = 0; j < view.dims(); ++j)
        xrow[static_cast<std::size_t>(j + 1)] = view.x(k, j);
      double eta = 0.0;
      for (int a = 0; a < p; ++a)
        eta += beta[static_cast<std::size_t>(a)] * xrow[static_cast<std::size_t>(a)];
      eta = std::clamp(eta, -30.0, 30.0);
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      const double w = std::max(mu * (1.0 - mu), 1e-10);
      const double r = view.y(k) - mu;
      for (int a = 0; a < p; ++a) {
        grad[static_cast<std::size_t>(a)] += xrow[static_cast<std::size_t>(a)] * r;
        for (int b = a; b < p; ++b)
          xtx[static_cast<std::size_t>(a) * p + b] +=
              w * xrow[static_cast<std::size_t>(a)] *
              xrow[static_cast<std::size_t>(b)];
      }
    }
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < a; ++b)
        xtx[static_cast<std::size_t>(a) * p + b] =
            xtx[static_cast<std::size_t>(b) * p + a];
    const auto step = solve_normal_equations(xtx, p, grad, ridge_eps);
    double max_step = 0.0;
    for (int a = 0; a < p; ++a) {
      beta[static_cast<std::size_t>(a)] += step[static_cast<std::size_t>(a)];
      max_step = std::max(max_step, std::abs(step[static_cast<std::size_t>(a)]));
    }
    if (max_step <= tol) break;
  }
  LogisticModel model;
  model.coef = std::move(beta);
  return model;
}

// -- boosting ---------------------------------------------------------------

struct WeakClassifier {
  bool constant = false;
  int constant_vote = 1;
  int feature = -1;
  double threshold = 0.0;
  int polarity = 1;
  double error = 0.0;
};

/// Minimum weighted 0-1 error over {constant +-1} and all proper stump
/// splits with both polarities. Candidate order (constants, then feature
/// ascending, threshold ascending, polarity +1 before -1) fixes ties.
inline WeakClassifier best_weak_classifier(const SampleView& view,
                                           std::span<const int> sign_labels,
                                           std::span<const double> weights) {
  const int n = view.size();
  double w_pos = 0.0, w_neg = 0.0;
  for (int k = 0; k < n; ++k) {
    if (sign_labels[static_cast<std::size_t>(k)] > 0)
      w_pos += weights[static_cast<std::size_t>(k)];
    else
      w_neg += weights[static_cast<std::size_t>(k)];
  }

  WeakClassifier best;
  best.constant = true;
  best.constant_vote = 1;
  best.error = w_neg;  // constant +1 misclassifies the negatives
  if (w_pos < best.error) {
    best.constant_vote = -1;
    best.error = w_pos;
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int f = 0; f < view.dims(); ++f) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return view.x(a, f) < view.x(b, f); });
    // err(+1 polarity) = w_pos(left) + w_neg(right)
    double left_pos = 0.0, left_neg = 0.0;
    for (int k = 0; k < n - 1; ++k) {
      const int idx = order[static_cast<std::size_t>(k)];
      if (sign_labels[static_cast<std::size_t>(idx)] > 0)
        left_pos += weights[static_cast<std::size_t>(idx)];
      else
        left_neg += weights[static_cast<std::size_t>(idx)];
      const double v = view.x(order[static_cast<std::size_t>(k)], f);
      const double v_next = view.x(order[static_cast<std::size_t>(k + 1)], f);
      if (v == v_next) continue;
      const double err_plus = left_pos + (w_neg - left_neg);
      const double err_minus = left_neg + (w_pos - left_pos);
      if (err_plus < best.error) {
        best = WeakClassifier{false, 1, f, v_next, 1, err_plus};
      }
      if (err_minus < best.error) {
        best = WeakClassifier{false, 1, f, v_next, -1, err_minus};
      }
    }
  }
  return best;
}

inline AdaBoostModel fit_adaboost(const SampleView& view, int rounds) {
  const int n = view.size();
  std::vector<int> sign_labels(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    sign_labels[static_cast<std::size_t>(k)] = view.y(k) >= 0.5 ? 1 : -1;

  std::vector<double> w(static_cast<std::size_t>(n), 1.0 / n);
  AdaBoostModel model;
  for (int t = 0; t < rounds; ++t) {
    const auto weak = best_weak_classifier(view, sign_labels, w);
    if (weak.error >= 0.5 - 1e-12) break;
    const double err = std::max(weak.error, 1e-12);
    const double alpha = 0.5 * std::log((1.0 - err) / err);

    AdaBoostModel::Round round;
    round.constant = weak.constant;
    round.constant_vote = weak.constant_vote;
    round.feature = weak.feature;
    round.threshold = weak.threshold;
    round.polarity = weak.polarity;
    round.alpha = alpha;
    model.rounds.push_back(round);
    model.alpha_sum += alpha;
    if (weak.error <= 1e-12) break;  // perfect weak learner, nothing to reweight

    double z = 0.0;
    for (int k = 0; k < n; ++k) {
      int vote;
      if (weak.constant) {
        vote = weak.constant_vote;
      } else {
        vote = view.x(k, weak.feature) >= weak.threshold ? 1 : -1;
        vote *= weak.polarity;
      }
      w[static_cast<std::size_t>(k)] *=
          std::exp(-alpha * sign_labels[static_cast<std::size_t>(k)] * vote);
      z += w[static_cast<std::size_t>(k)];
    }
    if (!(z > 0.0)) break;
    for (double& wk : w) wk /= z;
  }
  return model;
}

inline LogitBoostModel fit_logitboost(const SampleView& view, int rounds) {
  const int n = view.size();
  std::vector<double> ystar(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    ystar[static_cast<std::size_t>(k)] = view.y(k) >= 0.5 ? 1.0 : 0.0;

  std::vector<double> f2(static_cast<std::size_t>(n), 0.0);  // 2F(x_k)
  std::vector<double> z(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<int> positions(static_cast<std::size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  std::vector<int> features(static_cast<std::size_t>(view.dims()));
  std::iota(features.begin(), features.end(), 0);

  LogitBoostModel model;
  for (int t = 0; t < rounds; ++t) {
    double total_w = 0.0;
    for (int k = 0; k < n; ++k) {
      const double p =
          1.0 / (1.0 + std::exp(-std::clamp(f2[static_cast<std::size_t>(k)],
                                            -30.0, 30.0)));
      const double wk = std::max(p * (1.0 - p), 1e-8);
      z[static_cast<std::size_t>(k)] = std::clamp(
          (ystar[static_cast<std::size_t>(k)] - p) / wk, -4.0, 4.0);
      w[static_cast<std::size_t>(k)] = wk;
      total_w += wk;
    }
    if (total_w <= 1e-10) break;

    const auto split =
        best_stump_split(view, positions, z, w.data(), features, 1);
    LogitBoostModel::Round round;
    if (split) {
      round.constant = false;
      round.feature = split->feature;
      round.threshold = split->threshold;
      round.left_value = split->left_value;
      round.right_value = split->right_value;
    } else {
      round.constant = true;
      round.value = weighted_mean(positions, z, w.data());
    }
    model.rounds.push_back(round);

    double max_update = 0.0;
    for (int k = 0; k < n; ++k) {
      double fx;
      if (round.constant) {
        fx = round.value;
      } else {
        fx = view.x(k, round.feature) < round.threshold ? round.left_value
                                                        : round.right_value;
      }
      f2[static_cast<std::size_t>(k)] += fx;  // 2 * (0.5 * f)
      max_update = std::max(max_update, std::abs(fx));
    }
    if (max_update <= 1e-10) break;
  }
  return model;
}

inline ForestModel fit_forest(const SampleView& view, int n_trees,
                              int max_depth, int min_leaf, int mtry,
                              std::uint64_t seed) {
  n_trees = std::max(n_trees, 1);
  ForestModel model;
  model.trees.reserve(static_cast<std::size_t>(n_trees));
  const int n = view.size();
  const int effective_mtry =
      mtry > 0 ? std::min(mtry, view.dims())
               : static_cast<int>(std::ceil(std::sqrt(view.dims())));

  for (int t = 0; t < n_trees; ++t) {
    SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    SampleView tree_view = view;
    std::vector<int> boot_rows;
    if (n_trees > 1) {
      // A single-tree forest trains on the full sample; resampling starts at
      // two trees so the degenerate forest equals the plain tree.
      boot_rows.resize(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k)
        boot_rows[static_cast<std::size_t>(k)] =
            view.rows[rng.below(static_cast<std::uint64_t>(n))];
      tree_view.rows = boot_rows;
    }
    TreeFitConfig cfg;
    cfg.max_depth = max_depth;
    cfg.min_leaf = min_leaf;
    cfg.mtry = effective_mtry < view.dims() ? effective_mtry : 0;
    cfg.rng = &rng;
    const auto targets = positional_targets(tree_view);
    model.trees.push_back(fit_regression_tree(tree_view, targets, cfg));
  }
  return model;
}

inline void check_finite_or_throw(const std::vector<double>& values,
                                  const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw TrainError("fit failed: non-finite " + what);
  }
}

}  // namespace detail

/// Trains an algorithm on the selected rows. Deterministic for fixed
/// (spec, rows, seed). Rows with targets overridden by global row id support
/// pseudo-target fits without copying the dataset.
inline Predictor train(const AlgorithmSpec& spec, const Dataset& data,
                       std::span<const int> rows, std::uint64_t seed,
                       int min_train_samples = 10,
                       const std::vector<double>* target_override = nullptr) {
  if (static_cast<int>(rows.size()) < std::max(min_train_samples, 1))
    throw InsufficientDataError(
        "insufficient data: " + std::to_string(rows.size()) + " rows < " +
        std::to_string(min_train_samples));

  detail::SampleView view{&data, rows, target_override};
  Predictor out;
  out.algorithm = spec.id;
  out.dims = data.cols();

  switch (spec.kind) {
    case LearnerKind::linear_regression: {
      auto model = detail::fit_linear(view, spec.param("ridge_eps", 1e-8));
      detail::check_finite_or_throw(model.coef, "linear coefficients");
      out.state = std::move(model);
      break;
    }
    case LearnerKind::logistic_regression: {
      auto model = detail::fit_logistic(
          view, static_cast<int>(spec.param("max_iters", 100)),
          spec.param("tol", 1e-8), spec.param("ridge_eps", 1e-8));
      detail::check_finite_or_throw(model.coef, "logistic coefficients");
      out.state = std::move(model);
      break;
    }
    case LearnerKind::stump: {
      detail::TreeFitConfig cfg;
      cfg.max_depth = 1;
      cfg.min_leaf = 1;
      const auto targets = detail::positional_targets(view);
      out.state = detail::fit_regression_tree(view, targets, cfg);
      break;
    }
    case LearnerKind::tree: {
      detail::TreeFitConfig cfg;
      cfg.max_depth = static_cast<int>(spec.param("max_depth", 3));
      cfg.min_leaf = static_cast<int>(spec.param("min_leaf", 1));
      const auto targets = detail::positional_targets(view);
      out.state = detail::fit_regression_tree(view, targets, cfg);
      break;
    }
    case LearnerKind::adaboost: {
      const int rounds = static_cast<int>(spec.param("rounds", 50));
      if (spec.param("logistic", 0.0) != 0.0) {
        out.state = detail::fit_logitboost(view, rounds);
      } else {
        out.state = detail::fit_adaboost(view, rounds);
      }
      break;
    }
    case LearnerKind::random_forest: {
      out.state = detail::fit_forest(
          view, static_cast<int>(spec.param("trees", 50)),
          static_cast<int>(spec.param("max_depth", 8)),
          static_cast<int>(spec.param("min_leaf", 1)),
          static_cast<int>(spec.param("mtry", 0)),
          derive_seed(seed, {fnv1a64(spec.id),
                             static_cast<std::uint64_t>(
                                 spec.param("seed", 0))}));
      break;
    }
  }
  return out;
}

/// Named base-learner sets. "tops_lr" is plain linear regression; "tops_b"
/// is the five-member boosted/linear/forest family with default
/// hyperparameters.
inline std::vector<AlgorithmSpec> instantiation_set(const std::string& name) {
  if (name == "tops_lr") {
    return {AlgorithmSpec{"lr", LearnerKind::linear_regression, {}}};
  }
  if (name == "tops_b") {
    std::vector<AlgorithmSpec> set;
    set.push_back({"adaboost", LearnerKind::adaboost, {{"rounds", 50}}});
    set.push_back({"lr", LearnerKind::linear_regression, {}});
    set.push_back({"logit", LearnerKind::logistic_regression, {}});
    set.push_back({"logitboost",
                   LearnerKind::adaboost,
                   {{"rounds", 50}, {"logistic", 1}}});
    set.push_back({"rf",
                   LearnerKind::random_forest,
                   {{"trees", 50}, {"max_depth", 8}}});
    return set;
  }
  throw ConfigError("unknown instantiation '" + name +
                    "' (expected tops_lr or tops_b)");
}

/// Custom list by kind names, order preserved. Repeated kinds get a numeric
/// suffix so ids stay unique.
inline std::vector<AlgorithmSpec> instantiation_set(
    const std::vector<std::string>& kinds) {
  std::vector<AlgorithmSpec> set;
  std::map<std::string, int> seen;
  for (const auto& k : kinds) {
    AlgorithmSpec spec;
    spec.kind = parse_learner_kind(k);
    const int count = seen[k]++;
    spec.id = count == 0 ? k : k + "#" + std::to_string(count + 1);
    set.push_back(std::move(spec));
  }
  return set;
}

}  // namespace tops

#endif  // TOPS_LEARNERS_HPP
