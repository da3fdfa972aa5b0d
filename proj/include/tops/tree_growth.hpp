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

#ifndef TOPS_TREE_GROWTH_HPP
#define TOPS_TREE_GROWTH_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tops/dataset.hpp"
#include "tops/learners.hpp"
#include "tops/losses.hpp"
#include "tops/parallel.hpp"

namespace tops {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
};

/// One node of the grown tree: its region, the predictor chosen when the node
/// was created, and (for non-terminals) the accepted split.
struct NodeRecord {
  int id = 0;
  int parent = -1;
  int depth = 0;
  Cell cell;
  std::shared_ptr<const Predictor> predictor;
  std::optional<Split> split;
  double delta_v = 0.0;  // validation improvement from this node's split
  double delta_t = 0.0;  // terminal improvement of the final predictor
  bool auc_fallback = false;

  bool is_terminal() const { return !split.has_value(); }
};

/// The grown tree. Terminal cells partition the feature box, so every x has
/// exactly one root-to-terminal path.
struct TreeOfPredictors {
  std::vector<NodeRecord> nodes;
  int root = 0;

  const NodeRecord& node(int id) const {
    return nodes[static_cast<std::size_t>(id)];
  }
  NodeRecord& node(int id) { return nodes[static_cast<std::size_t>(id)]; }

  std::vector<int> terminal_ids() const {
    std::vector<int> out;
    for (const auto& n : nodes) {
      if (n.is_terminal()) out.push_back(n.id);
    }
    return out;
  }

  int find_terminal(std::span<const double> x) const {
    int id = root;
    while (!node(id).is_terminal()) {
      const Split& s = *node(id).split;
      id = x[static_cast<std::size_t>(s.feature)] < s.threshold ? s.left
                                                                : s.right;
    }
    return id;
  }

  /// Root-to-node chain of ids.
  std::vector<int> path_to(int id) const {
    std::vector<int> path;
    for (int cur = id; cur >= 0; cur = node(cur).parent) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
  }

  int depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }
};

struct GrowthOptions {
  int max_depth = 20;
  int min_leaf_v1 = 5;
  int min_train_samples = 10;
  double improvement_tol = 1e-9;
  int jobs = 1;
  std::uint64_t seed = 0;
};

struct SplitEvent {
  int node = 0;
  int feature = 0;
  double threshold = 0.0;
  double node_loss = 0.0;
  double joint_loss = 0.0;
  double delta_v = 0.0;
  double global_v1_loss = 0.0;
};

struct NodeCandidateStats {
  int node = 0;
  long long candidates = 0;
  long long limit = 0;  // N * D
};

struct GrowthReport {
  double root_v1_loss = 0.0;
  double final_v1_loss = 0.0;
  std::vector<SplitEvent> splits;
  std::vector<NodeCandidateStats> node_stats;
  std::vector<int> auc_fallback_nodes;
  long long total_candidates = 0;
  long long train_calls = 0;
};

/// Trained predictors keyed by (algorithm index, training node id). The same
/// training node is shared by many candidate evaluations; caching never
/// changes results because seeds depend only on the key.
class PredictorCache {
 public:
  std::shared_ptr<const Predictor> find(int alg, int node) const {
    auto it = entries_.find({alg, node});
    return it == entries_.end() ? nullptr : it->second;
  }
  void put(int alg, int node, std::shared_ptr<const Predictor> p) {
    entries_[{alg, node}] = std::move(p);
  }

 private:
  std::map<std::pair<int, int>, std::shared_ptr<const Predictor>> entries_;
};

/// Split thresholds for one feature from the node's training values: 0.5 for
/// binary features, deciles (10%..90%, nearest rank) of the node's values for
/// continuous ones. Thresholds that leave all values on one side are dropped.
inline std::vector<double> candidate_thresholds(const FeatureSpec& feature,
                                                std::vector<double> values) {
  std::vector<double> taus;
  if (values.empty()) return taus;
  if (feature.kind == FeatureKind::binary) {
    taus.push_back(0.5);
  } else {
    std::sort(values.begin(), values.end());
    const int n = static_cast<int>(values.size());
    for (int pct = 10; pct <= 90; pct += 10) {
      const int rank = static_cast<int>(
          std::ceil(static_cast<double>(pct) / 100.0 * n - 1e-9));
      const int idx = std::max(rank, 1) - 1;
      taus.push_back(values[static_cast<std::size_t>(idx)]);
    }
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> proper;
  for (double t : taus) {
    if (*lo < t && *hi >= t) proper.push_back(t);
  }
  return proper;
}

namespace detail {

inline ScoredSet score_rows(const Predictor& pred, const Dataset& data,
                            std::span<const int> rows) {
  ScoredSet out;
  out.scores.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (int r : rows) out.append(pred.score(data.row(r)), data.label(r));
  return out;
}

/// Loss kind actually used for split decisions at a node: 1-AUC degrades to
/// the error rate when the node's validation labels are single-class.
inline LossKind node_decision_kind(const LossSpec& spec, const Dataset& data,
                                   std::span<const int> v1_rows,
                                   bool* fell_back) {
  if (fell_back) *fell_back = false;
  if (spec.kind != LossKind::one_minus_auc) return spec.kind;
  bool has0 = false;
  bool has1 = false;
  for (int r : v1_rows) {
    (data.label(r) == 1.0 ? has1 : has0) = true;
    if (has0 && has1) return LossKind::one_minus_auc;
  }
  if (fell_back) *fell_back = true;
  return LossKind::error_rate;
}

inline double per_point_loss(LossKind kind, double score, double label) {
  switch (kind) {
    case LossKind::error_rate:
      return threshold_class(score) != static_cast<int>(label) ? 1.0 : 0.0;
    case LossKind::mae:
      return std::abs(score - label);
    case LossKind::mse: {
      const double d = score - label;
      return d * d;
    }
    case LossKind::one_minus_auc:
      break;
  }
  throw Error("per-point loss undefined for non-additive kinds");
}

struct ScoreLabel {
  double score;
  double label;
};

/// 1 - AUC of the union of two pre-sorted scored sets via a linear merge,
/// with the same integer half-credit arithmetic as losses.hpp.
inline double merged_one_minus_auc(std::span<const ScoreLabel> a,
                                   std::span<const ScoreLabel> b) {
  long long credits = 0;
  long long neg_below = 0;
  long long n_pos = 0;
  long long n_neg = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (i < a.size() && (j >= b.size() || a[i].score <= b[j].score)) {
      v = a[i].score;
    } else {
      v = b[j].score;
    }
    long long group_pos = 0;
    long long group_neg = 0;
    while (i < a.size() && a[i].score == v) {
      (a[i].label == 1.0 ? group_pos : group_neg)++;
      ++i;
    }
    while (j < b.size() && b[j].score == v) {
      (b[j].label == 1.0 ? group_pos : group_neg)++;
      ++j;
    }
    credits += group_pos * (2 * neg_below + group_neg);
    neg_below += group_neg;
    n_pos += group_pos;
    n_neg += group_neg;
  }
  if (n_pos == 0 || n_neg == 0)
    throw AucUndefinedError("AUC undefined: single-class union");
  const double auc = static_cast<double>(credits) /
                     (2.0 * static_cast<double>(n_pos) *
                      static_cast<double>(n_neg));
  return 1.0 - auc;
}

}  // namespace detail

struct SplitEvaluation {
  std::shared_ptr<const Predictor> left;
  std::shared_ptr<const Predictor> right;
  int left_trained_on = -1;   // node id; -1 means the child itself
  int right_trained_on = -1;  // node id; -1 means the child itself
  double joint_loss = 0.0;
};

/// Per-node state shared by every candidate (feature, threshold) evaluation:
/// the predictors trained on the node and its ancestors, pre-scored on the
/// node's validation rows. Building the context trains (and caches) whatever
/// is missing; evaluating candidates against it is read-only, so candidates
/// may run on any number of threads.
class NodeSplitContext {
 public:
  struct PoolEntry {
    std::shared_ptr<const Predictor> predictor;
    int trained_on = 0;
    int alg_index = 0;
    int distance = 0;  // 1 = the node itself, 2 = parent, ...
  };

  /// s_by_node/v1_by_node are optional caches of per-node row restrictions
  /// (grow maintains them); without them rows are recomputed from the global
  /// index sets by cell restriction.
  NodeSplitContext(const Dataset& data, const TreeOfPredictors& tree,
                   int node_id, std::span<const int> global_s,
                   std::span<const int> global_v1,
                   const std::vector<AlgorithmSpec>& algorithms,
                   const LossSpec& loss, const GrowthOptions& options,
                   PredictorCache& cache,
                   const std::vector<std::vector<int>>* s_by_node = nullptr,
                   const std::vector<std::vector<int>>* v1_by_node = nullptr)
      : data_(data),
        tree_(tree),
        node_id_(node_id),
        algorithms_(algorithms),
        loss_(loss),
        options_(options) {
    auto rows_for = [&](int id, std::span<const int> global,
                        const std::vector<std::vector<int>>* table) {
      if (table) return (*table)[static_cast<std::size_t>(id)];
      return restrict_rows(global, data_, tree_.node(id).cell);
    };
    s_rows_ = rows_for(node_id_, global_s, s_by_node);
    v1_rows_ = rows_for(node_id_, global_v1, v1_by_node);
    decision_kind_ =
        detail::node_decision_kind(loss_, data_, v1_rows_, &auc_fallback_);

    // Sources ordered nearest-first: the node itself, then each ancestor up
    // to the root.
    const auto path = tree_.path_to(node_id_);
    std::vector<std::pair<int, std::vector<int>>> sources;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      sources.emplace_back(*it, rows_for(*it, global_s, s_by_node));
    }

    for (int a = 0; a < static_cast<int>(algorithms_.size()); ++a) {
      for (std::size_t s = 0; s < sources.size(); ++s) {
        const int ancestor = sources[s].first;
        auto pred = cache.find(a, ancestor);
        if (!pred) {
          try {
            auto trained = train(
                algorithms_[static_cast<std::size_t>(a)], data_,
                sources[s].second,
                derive_seed(
                    options_.seed,
                    {fnv1a64(algorithms_[static_cast<std::size_t>(a)].id),
                     static_cast<std::uint64_t>(ancestor)}),
                options_.min_train_samples);
            train_calls_.fetch_add(1, std::memory_order_relaxed);
            trained.trained_on = ancestor;
            pred = std::make_shared<const Predictor>(std::move(trained));
            cache.put(a, ancestor, pred);
          } catch (const TrainError&) {
            pred = nullptr;
          }
        }
        if (pred) {
          pool_.push_back(PoolEntry{pred, ancestor, a, static_cast<int>(s) + 1});
        }
      }
    }

    pool_scores_.resize(pool_.size());
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      auto& scores = pool_scores_[i];
      scores.reserve(v1_rows_.size());
      for (int r : v1_rows_)
        scores.push_back(pool_[i].predictor->score(data_.row(r)));
    }
  }

  const Dataset& data() const { return data_; }
  int node_id() const { return node_id_; }
  const NodeRecord& node() const { return tree_.node(node_id_); }
  const std::vector<int>& s_rows() const { return s_rows_; }
  const std::vector<int>& v1_rows() const { return v1_rows_; }
  LossKind decision_kind() const { return decision_kind_; }
  bool auc_fallback() const { return auc_fallback_; }
  const GrowthOptions& options() const { return options_; }
  const std::vector<AlgorithmSpec>& algorithms() const { return algorithms_; }
  const std::vector<PoolEntry>& pool() const { return pool_; }
  const std::vector<std::vector<double>>& pool_scores() const {
    return pool_scores_;
  }
  long long train_calls() const {
    return train_calls_.load(std::memory_order_relaxed);
  }
  void count_train_call() const {
    train_calls_.fetch_add(1, std::memory_order_relaxed);
  }

  /// Loss of the node's current predictor on its own validation rows, under
  /// the node's decision loss.
  double unsplit_loss() const {
    const auto scored = detail::score_rows(*tree_.node(node_id_).predictor,
                                           data_, v1_rows_);
    return loss(LossSpec::of(decision_kind_), scored);
  }

 private:
  const Dataset& data_;
  const TreeOfPredictors& tree_;
  int node_id_;
  std::vector<int> s_rows_;
  std::vector<int> v1_rows_;
  std::vector<AlgorithmSpec> algorithms_;
  LossSpec loss_;
  GrowthOptions options_;
  LossKind decision_kind_ = LossKind::mse;
  bool auc_fallback_ = false;
  std::vector<PoolEntry> pool_;
  std::vector<std::vector<double>> pool_scores_;
  mutable std::atomic<long long> train_calls_{0};
};

namespace detail {

struct SideCandidate {
  std::shared_ptr<const Predictor> predictor;
  int trained_on = -1;  // -1 = the child itself
  int alg_index = 0;
  int distance = 0;
  std::vector<double> scores;  // on the side's validation rows
};

/// Admissible predictors for one side of a candidate split, in selection
/// order: algorithm list order first, then training set nearest the child
/// (the child itself, the node, then each ancestor up to the root).
inline std::vector<SideCandidate> side_candidates(
    const NodeSplitContext& ctx, int feature, double tau, bool upper_side,
    std::span<const int> side_v1_positions) {
  std::vector<int> child_s;
  for (int r : ctx.s_rows()) {
    const bool in_upper = ctx.data().feature(r, feature) >= tau;
    if (in_upper == upper_side) child_s.push_back(r);
  }

  std::vector<SideCandidate> out;
  const auto& algs = ctx.algorithms();
  std::size_t pool_cursor = 0;
  for (int a = 0; a < static_cast<int>(algs.size()); ++a) {
    if (static_cast<int>(child_s.size()) >= ctx.options().min_train_samples) {
      try {
        auto trained = train(
            algs[static_cast<std::size_t>(a)], ctx.data(), child_s,
            derive_seed(
                ctx.options().seed,
                {fnv1a64("child"),
                 fnv1a64(algs[static_cast<std::size_t>(a)].id),
                 static_cast<std::uint64_t>(ctx.node_id()),
                 static_cast<std::uint64_t>(upper_side ? 1 : 0)}),
            ctx.options().min_train_samples);
        ctx.count_train_call();
        SideCandidate cand;
        cand.predictor = std::make_shared<const Predictor>(std::move(trained));
        cand.trained_on = -1;
        cand.alg_index = a;
        cand.distance = 0;
        cand.scores.reserve(side_v1_positions.size());
        for (int pos : side_v1_positions) {
          const int row = ctx.v1_rows()[static_cast<std::size_t>(pos)];
          cand.scores.push_back(cand.predictor->score(ctx.data().row(row)));
        }
        out.push_back(std::move(cand));
      } catch (const TrainError&) {
        // infeasible candidate, skip
      }
    }
    // Pool entries are already ordered by (alg_index, distance).
    while (pool_cursor < ctx.pool().size() &&
           ctx.pool()[pool_cursor].alg_index == a) {
      const auto& entry = ctx.pool()[pool_cursor];
      SideCandidate cand;
      cand.predictor = entry.predictor;
      cand.trained_on = entry.trained_on;
      cand.alg_index = entry.alg_index;
      cand.distance = entry.distance;
      cand.scores.reserve(side_v1_positions.size());
      for (int pos : side_v1_positions)
        cand.scores.push_back(
            ctx.pool_scores()[pool_cursor][static_cast<std::size_t>(pos)]);
      out.push_back(std::move(cand));
      ++pool_cursor;
    }
  }
  return out;
}

}  // namespace detail

/// Evaluates one candidate split of the context's node: gathers admissible
/// predictors for each side and picks the pair minimizing the joint loss of
/// the two validation restrictions, computed on their concatenation. Returns
/// nullopt when either side has too few validation rows or no trainable
/// predictor.
inline std::optional<SplitEvaluation> evaluate_split(
    const NodeSplitContext& ctx, int feature, double tau) {
  if (!ctx.node().cell.admits_threshold(feature, tau)) return std::nullopt;

  std::vector<int> lower_pos;
  std::vector<int> upper_pos;
  std::vector<double> lower_labels;
  std::vector<double> upper_labels;
  for (int k = 0; k < static_cast<int>(ctx.v1_rows().size()); ++k) {
    const int row = ctx.v1_rows()[static_cast<std::size_t>(k)];
    if (ctx.data().feature(row, feature) < tau) {
      lower_pos.push_back(k);
      lower_labels.push_back(ctx.data().label(row));
    } else {
      upper_pos.push_back(k);
      upper_labels.push_back(ctx.data().label(row));
    }
  }
  const int min_leaf = std::max(ctx.options().min_leaf_v1, 1);
  if (static_cast<int>(lower_pos.size()) < min_leaf ||
      static_cast<int>(upper_pos.size()) < min_leaf)
    return std::nullopt;

  const auto lower = detail::side_candidates(ctx, feature, tau, false, lower_pos);
  const auto upper = detail::side_candidates(ctx, feature, tau, true, upper_pos);
  if (lower.empty() || upper.empty()) return std::nullopt;

  const LossKind kind = ctx.decision_kind();
  SplitEvaluation best;
  best.joint_loss = std::numeric_limits<double>::infinity();

  auto commit = [&](const detail::SideCandidate& l,
                    const detail::SideCandidate& r, double joint) {
    best.joint_loss = joint;
    best.left = l.predictor;
    best.right = r.predictor;
    best.left_trained_on = l.trained_on;
    best.right_trained_on = r.trained_on;
  };

  if (kind != LossKind::one_minus_auc) {
    // Additive losses decompose over the sides, so the first per-side minima
    // in selection order form the jointly optimal (and tie-break-correct)
    // pair.
    auto side_best = [&](const std::vector<detail::SideCandidate>& cands,
                         const std::vector<double>& labels) {
      int best_idx = -1;
      double best_sum = std::numeric_limits<double>::infinity();
      for (int i = 0; i < static_cast<int>(cands.size()); ++i) {
        double sum = 0.0;
        const auto& c = cands[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < labels.size(); ++k)
          sum += detail::per_point_loss(kind, c.scores[k], labels[k]);
        if (sum < best_sum) {
          best_sum = sum;
          best_idx = i;
        }
      }
      return std::pair<int, double>(best_idx, best_sum);
    };
    const auto [li, lsum] = side_best(lower, lower_labels);
    const auto [ri, rsum] = side_best(upper, upper_labels);
    if (li < 0 || ri < 0) return std::nullopt;
    const double joint =
        (lsum + rsum) /
        static_cast<double>(lower_labels.size() + upper_labels.size());
    commit(lower[static_cast<std::size_t>(li)],
           upper[static_cast<std::size_t>(ri)], joint);
  } else {
    // 1-AUC does not decompose; scan all pairs over pre-sorted side scores.
    auto sorted_sides = [](const std::vector<detail::SideCandidate>& cands,
                           const std::vector<double>& labels) {
      std::vector<std::vector<detail::ScoreLabel>> out(cands.size());
      for (std::size_t i = 0; i < cands.size(); ++i) {
        auto& v = out[i];
        v.resize(labels.size());
        for (std::size_t k = 0; k < labels.size(); ++k)
          v[k] = {cands[i].scores[k], labels[k]};
        std::sort(v.begin(), v.end(),
                  [](const detail::ScoreLabel& a, const detail::ScoreLabel& b) {
                    return a.score < b.score;
                  });
      }
      return out;
    };
    const auto lower_sorted = sorted_sides(lower, lower_labels);
    const auto upper_sorted = sorted_sides(upper, upper_labels);
    for (std::size_t i = 0; i < lower.size(); ++i) {
      for (std::size_t j = 0; j < upper.size(); ++j) {
        const double joint =
            detail::merged_one_minus_auc(lower_sorted[i], upper_sorted[j]);
        if (joint < best.joint_loss) commit(lower[i], upper[j], joint);
      }
    }
    if (!best.left) return std::nullopt;
  }
  return best;
}

/// Trains every algorithm on the full training rows and keeps the one with
/// the lowest validation loss (first in list order wins ties). Fatal when
/// nothing trains.
inline NodeRecord fit_root(const Dataset& data, std::span<const int> s_rows,
                           std::span<const int> v1_rows,
                           const std::vector<AlgorithmSpec>& algorithms,
                           const LossSpec& loss_spec,
                           const GrowthOptions& options = {}) {
  if (s_rows.empty() || v1_rows.empty())
    throw DataError("fit_root: S and V1 must be non-empty");

  bool fallback = false;
  const LossKind kind =
      detail::node_decision_kind(loss_spec, data, v1_rows, &fallback);

  std::shared_ptr<const Predictor> best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    std::shared_ptr<const Predictor> pred;
    try {
      auto trained =
          train(algorithms[a], data, s_rows,
                derive_seed(options.seed, {fnv1a64(algorithms[a].id), 0}),
                options.min_train_samples);
      trained.trained_on = 0;
      pred = std::make_shared<const Predictor>(std::move(trained));
    } catch (const TrainError&) {
      continue;
    }
    const auto scored = detail::score_rows(*pred, data, v1_rows);
    const double l = loss(LossSpec::of(kind), scored);
    if (l < best_loss) {
      best_loss = l;
      best = pred;
    }
  }
  if (!best)
    throw TrainError("fit_root: no base learner could be trained on S");

  NodeRecord root;
  root.id = 0;
  root.parent = -1;
  root.depth = 0;
  root.cell = Cell::root(data.cols());
  root.predictor = std::move(best);
  root.auc_fallback = fallback;
  return root;
}

struct GrowthResult {
  TreeOfPredictors tree;
  GrowthReport report;
};

namespace detail {

/// Joint loss of the terminal predictors on the union of their validation
/// restrictions, concatenated in terminal-id order. Falls back to the error
/// rate if 1-AUC is undefined on the full validation set.
inline double global_v1_loss(const TreeOfPredictors& tree, const Dataset& data,
                             const std::vector<std::vector<int>>& v1_by_node,
                             const LossSpec& spec) {
  ScoredSet all;
  for (const auto& n : tree.nodes) {
    if (!n.is_terminal()) continue;
    for (int r : v1_by_node[static_cast<std::size_t>(n.id)])
      all.append(n.predictor->score(data.row(r)), data.label(r));
  }
  LossKind kind = spec.kind;
  if (spec.kind == LossKind::one_minus_auc) {
    bool has0 = false;
    bool has1 = false;
    for (double y : all.labels) (y == 1.0 ? has1 : has0) = true;
    if (!(has0 && has1)) kind = LossKind::error_rate;
  }
  return loss(LossSpec::of(kind), all);
}

inline void check_unique_ids(const std::vector<AlgorithmSpec>& algorithms) {
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < algorithms.size(); ++j) {
      if (algorithms[i].id == algorithms[j].id)
        throw ConfigError("duplicate algorithm id '" + algorithms[i].id + "'");
    }
  }
}

}  // namespace detail

/// Grows the locally optimal tree: repeatedly, for each terminal node, the
/// candidate (feature, threshold, left predictor, right predictor) with the
/// lowest joint validation loss is accepted iff it strictly beats the node's
/// own loss. Node ids, tie-breaks, and the final tree are all independent of
/// the number of worker threads.
inline GrowthResult grow(const Dataset& data, std::span<const int> s_rows,
                         std::span<const int> v1_rows,
                         const std::vector<AlgorithmSpec>& algorithms,
                         const LossSpec& loss_spec,
                         const GrowthOptions& options = {}) {
  detail::check_unique_ids(algorithms);

  GrowthResult result;
  auto& tree = result.tree;
  auto& report = result.report;

  tree.nodes.push_back(
      fit_root(data, s_rows, v1_rows, algorithms, loss_spec, options));
  tree.root = 0;

  std::vector<std::vector<int>> s_by_node{{s_rows.begin(), s_rows.end()}};
  std::vector<std::vector<int>> v1_by_node{{v1_rows.begin(), v1_rows.end()}};

  PredictorCache cache;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    if (algorithms[a].id == tree.node(0).predictor->algorithm)
      cache.put(static_cast<int>(a), 0, tree.node(0).predictor);
  }

  report.root_v1_loss =
      detail::global_v1_loss(tree, data, v1_by_node, loss_spec);
  report.final_v1_loss = report.root_v1_loss;
  if (tree.node(0).auc_fallback) report.auc_fallback_nodes.push_back(0);

  std::deque<int> open{0};
  while (!open.empty()) {
    const int nid = open.front();
    open.pop_front();

    if (tree.node(nid).depth >= options.max_depth) continue;

    NodeSplitContext ctx(data, tree, nid, s_rows, v1_rows, algorithms,
                         loss_spec, options, cache, &s_by_node, &v1_by_node);
    if (ctx.auc_fallback() && nid != 0) {
      report.auc_fallback_nodes.push_back(nid);
      tree.node(nid).auc_fallback = true;
    }

    // Feature index ascending, thresholds ascending: with strictly-better
    // updates below this realizes the (feature, threshold) tie-break.
    std::vector<std::pair<int, double>> candidates;
    const auto& node_s = s_by_node[static_cast<std::size_t>(nid)];
    for (int f = 0; f < data.cols(); ++f) {
      std::vector<double> values;
      values.reserve(node_s.size());
      for (int r : node_s) values.push_back(data.feature(r, f));
      for (double t : candidate_thresholds(data.spec(f), values)) {
        if (ctx.node().cell.admits_threshold(f, t))
          candidates.emplace_back(f, t);
      }
    }

    NodeCandidateStats stats;
    stats.node = nid;
    stats.candidates = static_cast<long long>(candidates.size());
    stats.limit = static_cast<long long>(data.rows()) *
                  static_cast<long long>(data.cols());
    report.node_stats.push_back(stats);
    report.total_candidates += stats.candidates;

    if (candidates.empty()) {
      report.train_calls += ctx.train_calls();
      continue;
    }

    std::vector<std::optional<SplitEvaluation>> evaluations(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), options.jobs, [&](int i) {
      const auto& [f, tau] = candidates[static_cast<std::size_t>(i)];
      evaluations[static_cast<std::size_t>(i)] = evaluate_split(ctx, f, tau);
    });
    report.train_calls += ctx.train_calls();

    const double node_loss = ctx.unsplit_loss();
    int best_idx = -1;
    double best_joint = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(evaluations.size()); ++i) {
      const auto& ev = evaluations[static_cast<std::size_t>(i)];
      if (ev && ev->joint_loss < best_joint) {
        best_joint = ev->joint_loss;
        best_idx = i;
      }
    }
    if (best_idx < 0 || !(best_joint < node_loss - options.improvement_tol))
      continue;

    const auto& [feature, tau] = candidates[static_cast<std::size_t>(best_idx)];
    auto chosen = *evaluations[static_cast<std::size_t>(best_idx)];
    const int left_id = static_cast<int>(tree.nodes.size());
    const int right_id = left_id + 1;
    auto cells = tree.node(nid).cell.split(feature, tau);

    auto make_child = [&](int id, Cell cell,
                          std::shared_ptr<const Predictor> pred,
                          int trained_on) {
      NodeRecord child;
      child.id = id;
      child.parent = nid;
      child.depth = tree.node(nid).depth + 1;
      child.cell = std::move(cell);
      if (trained_on == -1) {
        // Trained on the child's own rows; stamp the new node id.
        Predictor copy = *pred;
        copy.trained_on = id;
        child.predictor = std::make_shared<const Predictor>(std::move(copy));
      } else {
        child.predictor = std::move(pred);
      }
      return child;
    };

    tree.nodes.push_back(make_child(left_id, std::move(cells.first),
                                    chosen.left, chosen.left_trained_on));
    tree.nodes.push_back(make_child(right_id, std::move(cells.second),
                                    chosen.right, chosen.right_trained_on));

    auto split_rows = [&](const std::vector<int>& rows) {
      std::pair<std::vector<int>, std::vector<int>> parts;
      for (int r : rows) {
        (data.feature(r, feature) < tau ? parts.first : parts.second)
            .push_back(r);
      }
      return parts;
    };
    auto s_parts = split_rows(s_by_node[static_cast<std::size_t>(nid)]);
    auto v_parts = split_rows(v1_by_node[static_cast<std::size_t>(nid)]);
    s_by_node.push_back(std::move(s_parts.first));
    s_by_node.push_back(std::move(s_parts.second));
    v1_by_node.push_back(std::move(v_parts.first));
    v1_by_node.push_back(std::move(v_parts.second));

    tree.node(nid).split = Split{feature, tau, left_id, right_id};
    tree.node(nid).delta_v = node_loss - best_joint;

    SplitEvent event;
    event.node = nid;
    event.feature = feature;
    event.threshold = tau;
    event.node_loss = node_loss;
    event.joint_loss = best_joint;
    event.delta_v = node_loss - best_joint;
    event.global_v1_loss =
        detail::global_v1_loss(tree, data, v1_by_node, loss_spec);
    report.splits.push_back(event);
    report.final_v1_loss = event.global_v1_loss;

    open.push_back(left_id);
    open.push_back(right_id);
  }

  return result;
}

}  // namespace tops

#endif  // TOPS_TREE_GROWTH_HPP
