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

#ifndef TOPS_HARNESS_HPP
#define TOPS_HARNESS_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tops/bounds.hpp"
#include "tops/dataset.hpp"
#include "tops/inference.hpp"
#include "tops/learners.hpp"
#include "tops/losses.hpp"
#include "tops/path_weights.hpp"
#include "tops/stats.hpp"
#include "tops/tree_growth.hpp"

namespace tops {

/// Relative loss reduction of ToPs against a baseline.
inline double gain(double loss_tops, double loss_baseline) {
  if (!(loss_baseline > 0.0))
    throw ConfigError("gain: baseline loss must be positive");
  return (loss_baseline - loss_tops) / loss_baseline;
}

/// Two-sided two-sample Student t-test with pooled variance. Degenerate
/// samples (zero pooled variance) give p=1 for equal means and p=0 otherwise.
inline double t_test(std::span<const double> sample_a,
                     std::span<const double> sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2)
    throw ConfigError("t_test: both samples need at least 2 values");
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  const double ma = sample_mean(sample_a);
  const double mb = sample_mean(sample_b);
  double ssa = 0.0;
  double ssb = 0.0;
  for (double v : sample_a) ssa += (v - ma) * (v - ma);
  for (double v : sample_b) ssb += (v - mb) * (v - mb);
  const double nu = na + nb - 2.0;
  const double pooled = (ssa + ssb) / nu;
  if (pooled == 0.0) return ma == mb ? 1.0 : 0.0;
  const double t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  return detail::student_t_two_sided_p(t, nu);
}

// ---------------------------------------------------------------------------
// Train pipeline
// ---------------------------------------------------------------------------

struct TrainedModel {
  OverallPredictor model;
  GrowthReport growth;
  Dataset normalized;  // full dataset mapped through the fitted scaling
  Partition partition;
};

namespace detail {

inline double model_score_normalized(const OverallPredictor& model,
                                     std::span<const double> x) {
  const int terminal = model.tree.find_terminal(x);
  const auto* entry = model.weights.find(terminal);
  double sum = 0.0;
  for (std::size_t k = 0; k < entry->path.size(); ++k)
    sum += entry->w[k] * model.tree.node(entry->path[k]).predictor->score(x);
  return sum;
}

/// Configured loss with the single-class 1-AUC fallback to error rate.
inline double loss_with_fallback(const LossSpec& spec, const ScoredSet& scored,
                                 bool* fell_back = nullptr) {
  if (fell_back) *fell_back = false;
  if (spec.kind == LossKind::one_minus_auc) {
    bool has0 = false;
    bool has1 = false;
    for (double y : scored.labels) (y == 1.0 ? has1 : has0) = true;
    if (!(has0 && has1)) {
      if (fell_back) *fell_back = true;
      return loss(LossSpec::of(LossKind::error_rate), scored);
    }
  }
  return loss(spec, scored);
}

}  // namespace detail

/// Full training pipeline: normalize on S, grow the tree against V1, fit the
/// path weights against V2, and record each terminal's improvement of the
/// final predictor over the initial root predictor on its V2 rows.
inline TrainedModel train_tops(const Dataset& raw, const Partition& partition,
                               const std::vector<AlgorithmSpec>& algorithms,
                               const LossSpec& loss_spec,
                               const GrowthOptions& growth_options = {},
                               const WeightFitOptions& weight_options = {},
                               ModelMetadata metadata = {}) {
  if (is_classification_loss(loss_spec.kind) &&
      raw.label_kind() != LabelKind::binary)
    throw ConfigError("loss '" + loss_name(loss_spec.kind) +
                      "' incompatible with label kind: labels are not binary");

  auto [normalized, params] = normalize(raw, partition.s);
  auto grown = grow(normalized, partition.s, partition.v1, algorithms,
                    loss_spec, growth_options);
  auto weights = optimize_weights(grown.tree, normalized, partition.v2,
                                  loss_spec, weight_options);

  OverallPredictor model;
  model.tree = std::move(grown.tree);
  model.weights = std::move(weights);
  model.features = raw.specs();
  model.normalization = std::move(params);
  model.label_kind = raw.label_kind();
  model.loss = loss_spec;
  model.algorithms = algorithms;
  model.weight_fit = weight_options.mode;
  model.metadata = std::move(metadata);

  // Terminal improvement: initial root predictor vs the final weighted
  // predictor, both on the terminal's V2 rows.
  const auto& root_predictor = *model.tree.node(model.tree.root).predictor;
  for (int terminal : model.tree.terminal_ids()) {
    auto& node = model.tree.node(terminal);
    const auto rows = restrict_rows(partition.v2, normalized, node.cell);
    if (rows.empty()) {
      node.delta_t = 0.0;
      continue;
    }
    ScoredSet by_root;
    ScoredSet by_model;
    for (int r : rows) {
      by_root.append(root_predictor.score(normalized.row(r)),
                     normalized.label(r));
      by_model.append(detail::model_score_normalized(model, normalized.row(r)),
                      normalized.label(r));
    }
    node.delta_t = detail::loss_with_fallback(loss_spec, by_root) -
                   detail::loss_with_fallback(loss_spec, by_model);
  }

  TrainedModel out{std::move(model), std::move(grown.report),
                   std::move(normalized), partition};
  return out;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string data_path;
  DataSchema schema;
  std::string instantiation = "tops_lr";   // tops_lr | tops_b | custom
  std::vector<std::string> custom_learners;
  LossSpec loss = LossSpec::of(LossKind::mse);
  std::array<double, 3> ratios{0.75, 0.15, 0.10};
  double test_fraction = 0.2;  // used when cv_folds == 0
  int n_runs = 10;
  int cv_folds = 0;  // 0 = simple train/test split per run
  std::vector<std::uint64_t> seeds;
  GrowthOptions limits;
  WeightFitOptions weight_fit;
  std::vector<AlgorithmSpec> baselines;
  int jobs = 1;

  std::vector<AlgorithmSpec> algorithms() const {
    if (instantiation == "custom") return instantiation_set(custom_learners);
    return instantiation_set(instantiation);
  }

  void validate() const {
    if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
    if (cv_folds < 0 || cv_folds == 1)
      throw ConfigError("cv_folds must be 0 (off) or >= 2");
    if (static_cast<int>(seeds.size()) != n_runs)
      throw ConfigError("seeds list length must equal n_runs");
    if (cv_folds == 0 && !(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("test_fraction must be in (0,1)");
  }
};

struct MethodResult {
  std::string name;
  std::vector<double> per_run;   // per run (mean over folds when cv is on)
  std::vector<double> per_eval;  // every (run, fold) evaluation
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> gain_vs_tops;
  std::optional<double> p_value;
};

struct ExperimentReport {
  MethodResult tops;
  std::vector<MethodResult> baselines;
  int n_runs = 0;
  int cv_folds = 0;
  bool loss_fallback_used = false;
  std::vector<double> wall_ms_per_run;  // timing; inherently not reproducible
  std::vector<long long> candidate_evals_per_run;
  long long max_node_candidates = 0;
  long long node_candidate_limit = 0;  // N * D
};

/// Runs the repeated-split (or k-fold) protocol: per evaluation, partition
/// the training portion into S/V1/V2, train the full pipeline, and score the
/// held-out rows with the configured loss; each baseline is trained globally
/// on the same S and scored identically. Deterministic given the seed list,
/// except for wall-clock timing.
inline ExperimentReport run_experiment(const ExperimentConfig& config,
                                       const Dataset& data) {
  config.validate();
  const auto algorithms = config.algorithms();

  ExperimentReport report;
  report.n_runs = config.n_runs;
  report.cv_folds = config.cv_folds;
  report.tops.name = "tops/" + config.instantiation;
  for (const auto& b : config.baselines)
    report.baselines.push_back(MethodResult{b.id, {}, {}, 0.0, 0.0, {}, {}});

  const int n = data.rows();
  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (int run = 0; run < config.n_runs; ++run) {
    const std::uint64_t run_seed = config.seeds[static_cast<std::size_t>(run)];
    const auto started = std::chrono::steady_clock::now();
    long long run_candidates = 0;

    std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
    if (config.cv_folds == 0) {
      std::vector<int> order = all_rows;
      SplitMix64 rng(derive_seed(run_seed, {fnv1a64("train_test")}));
      rng.shuffle(order);
      const int n_test =
          std::max(1, static_cast<int>(std::floor(config.test_fraction * n)));
      std::vector<int> test(order.begin(), order.begin() + n_test);
      std::vector<int> train_rows(order.begin() + n_test, order.end());
      std::sort(test.begin(), test.end());
      std::sort(train_rows.begin(), train_rows.end());
      folds.emplace_back(std::move(train_rows), std::move(test));
    } else {
      std::vector<int> order = all_rows;
      SplitMix64 rng(derive_seed(run_seed, {fnv1a64("folds")}));
      rng.shuffle(order);
      for (int f = 0; f < config.cv_folds; ++f) {
        const int begin = static_cast<int>(
            static_cast<long long>(f) * n / config.cv_folds);
        const int end = static_cast<int>(
            static_cast<long long>(f + 1) * n / config.cv_folds);
        std::vector<int> test(order.begin() + begin, order.begin() + end);
        std::vector<int> train_rows;
        train_rows.reserve(static_cast<std::size_t>(n - (end - begin)));
        train_rows.insert(train_rows.end(), order.begin(), order.begin() + begin);
        train_rows.insert(train_rows.end(), order.begin() + end, order.end());
        std::sort(test.begin(), test.end());
        std::sort(train_rows.begin(), train_rows.end());
        folds.emplace_back(std::move(train_rows), std::move(test));
      }
    }

    std::vector<double> tops_fold_losses;
    std::vector<std::vector<double>> baseline_fold_losses(
        config.baselines.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto& [train_rows, test_rows] = folds[f];
      const auto partition = split_partition(
          std::span<const int>(train_rows), config.ratios,
          derive_seed(run_seed, {fnv1a64("partition"), f}));

      GrowthOptions growth = config.limits;
      growth.seed = derive_seed(run_seed, {fnv1a64("grow"), f});
      growth.jobs = config.jobs;
      WeightFitOptions wopt = config.weight_fit;
      wopt.jobs = config.jobs;

      ModelMetadata meta;
      meta.seed = run_seed;
      const auto trained = train_tops(data, partition, algorithms, config.loss,
                                      growth, wopt, meta);
      run_candidates += trained.growth.total_candidates;
      for (const auto& ns : trained.growth.node_stats) {
        report.max_node_candidates =
            std::max(report.max_node_candidates, ns.candidates);
        report.node_candidate_limit = ns.limit;
      }

      ScoredSet tops_scored;
      for (int r : test_rows)
        tops_scored.append(predict(trained.model, data.row(r)), data.label(r));
      bool fell_back = false;
      tops_fold_losses.push_back(
          detail::loss_with_fallback(config.loss, tops_scored, &fell_back));
      report.loss_fallback_used |= fell_back;

      for (std::size_t b = 0; b < config.baselines.size(); ++b) {
        const auto baseline = train(
            config.baselines[b], trained.normalized, partition.s,
            derive_seed(run_seed,
                        {fnv1a64("baseline"), fnv1a64(config.baselines[b].id), f}),
            config.limits.min_train_samples);
        ScoredSet scored;
        for (int r : test_rows)
          scored.append(baseline.score(trained.normalized.row(r)),
                        data.label(r));
        baseline_fold_losses[b].push_back(
            detail::loss_with_fallback(config.loss, scored, &fell_back));
        report.loss_fallback_used |= fell_back;
      }
    }

    report.tops.per_eval.insert(report.tops.per_eval.end(),
                                tops_fold_losses.begin(),
                                tops_fold_losses.end());
    report.tops.per_run.push_back(sample_mean(tops_fold_losses));
    for (std::size_t b = 0; b < config.baselines.size(); ++b) {
      auto& res = report.baselines[b];
      res.per_eval.insert(res.per_eval.end(), baseline_fold_losses[b].begin(),
                          baseline_fold_losses[b].end());
      res.per_run.push_back(sample_mean(baseline_fold_losses[b]));
    }

    const auto elapsed = std::chrono::steady_clock::now() - started;
    report.wall_ms_per_run.push_back(
        std::chrono::duration<double, std::milli>(elapsed).count());
    report.candidate_evals_per_run.push_back(run_candidates);
  }

  report.tops.mean = sample_mean(report.tops.per_run);
  report.tops.stddev = sample_std(report.tops.per_run);
  for (auto& res : report.baselines) {
    res.mean = sample_mean(res.per_run);
    res.stddev = sample_std(res.per_run);
    if (res.mean > 0.0) res.gain_vs_tops = gain(report.tops.mean, res.mean);
    if (config.n_runs >= 2) res.p_value = t_test(report.tops.per_run, res.per_run);
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  const Dataset data = load_csv(config.data_path, config.schema);
  return run_experiment(config, data);
}

// ---------------------------------------------------------------------------
// DOT export
// ---------------------------------------------------------------------------

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

inline std::string format_double(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

}  // namespace detail

/// Renders the tree as a DOT digraph. Non-terminals carry their split,
/// learner, training-set marker (one up arrow per ancestor hop), and the
/// validation improvement of the split; terminals are shaded and carry the
/// final-vs-initial improvement on their second-validation rows. Passing a
/// terminal id highlights its path and annotates the fitted weights.
inline std::string export_dot(const OverallPredictor& model,
                              std::optional<int> highlighted_terminal = {}) {
  const auto& tree = model.tree;
  std::vector<int> highlight_path;
  if (highlighted_terminal) {
    const int t = *highlighted_terminal;
    if (t < 0 || t >= static_cast<int>(tree.nodes.size()))
      throw ConfigError("unknown terminal id " + std::to_string(t));
    if (!tree.node(t).is_terminal())
      throw ConfigError("node " + std::to_string(t) + " is not a terminal");
    highlight_path = tree.path_to(t);
  }
  auto on_path = [&](int id) {
    return std::find(highlight_path.begin(), highlight_path.end(), id) !=
           highlight_path.end();
  };
  const PathWeights::Entry* highlight_entry =
      highlighted_terminal ? model.weights.find(*highlighted_terminal)
                           : nullptr;
  auto weight_of = [&](int id) -> std::optional<double> {
    if (!highlight_entry) return {};
    for (std::size_t k = 0; k < highlight_entry->path.size(); ++k) {
      if (highlight_entry->path[k] == id) return highlight_entry->w[k];
    }
    return {};
  };

  std::ostringstream os;
  os << "digraph tops {\n";
  os << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& n : tree.nodes) {
    std::string label;
    const auto& pred = *n.predictor;
    std::string marker;
    if (pred.trained_on != n.id) {
      const int hops = n.depth - tree.node(pred.trained_on).depth;
      for (int h = 0; h < hops; ++h) marker += "\xE2\x86\x91";  // up arrow
    }
    if (!n.is_terminal()) {
      const auto& s = *n.split;
      label = detail::dot_escape(
                  model.features[static_cast<std::size_t>(s.feature)].name) +
              " >= " + detail::format_double(s.threshold) + "\\n" +
              detail::dot_escape(pred.algorithm) + marker +
              "\\n\xCE\x94v = " + detail::format_double(n.delta_v);
    } else {
      label = detail::dot_escape(pred.algorithm) + marker +
              "\\n\xCE\x94t = " + detail::format_double(n.delta_t);
    }
    if (const auto w = weight_of(n.id))
      label += "\\nw = " + detail::format_double(*w);

    os << "  n" << n.id << " [label=\"" << label << "\"";
    if (n.is_terminal()) os << ", style=filled, fillcolor=lightgrey";
    if (on_path(n.id)) os << ", color=blue, penwidth=2";
    os << "];\n";
  }
  for (const auto& n : tree.nodes) {
    if (n.is_terminal()) continue;
    const auto& s = *n.split;
    const std::string tau = detail::format_double(s.threshold);
    for (int side = 0; side < 2; ++side) {
      const int child = side == 0 ? s.left : s.right;
      os << "  n" << n.id << " -> n" << child << " [label=\""
         << (side == 0 ? "< " : ">= ") << tau;
      if (on_path(n.id) && on_path(child)) {
        if (const auto w = weight_of(child))
          os << ", w = " << detail::format_double(*w);
        os << "\", color=blue, penwidth=2];\n";
      } else {
        os << "\"];\n";
      }
    }
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json growth_report_to_json(const GrowthReport& report) {
  using nlohmann::json;
  json j;
  j["root_v1_loss"] = report.root_v1_loss;
  j["final_v1_loss"] = report.final_v1_loss;
  json trajectory = json::array();
  trajectory.push_back(report.root_v1_loss);
  json splits = json::array();
  for (const auto& s : report.splits) {
    trajectory.push_back(s.global_v1_loss);
    splits.push_back(json{{"node", s.node},
                          {"feature", s.feature},
                          {"threshold", s.threshold},
                          {"node_loss", s.node_loss},
                          {"joint_loss", s.joint_loss},
                          {"delta_v", s.delta_v},
                          {"global_v1_loss", s.global_v1_loss}});
  }
  j["v1_trajectory"] = std::move(trajectory);
  j["splits"] = std::move(splits);
  json stats = json::array();
  for (const auto& ns : report.node_stats) {
    stats.push_back(json{{"node", ns.node},
                         {"candidates", ns.candidates},
                         {"limit", ns.limit}});
  }
  j["node_candidates"] = std::move(stats);
  j["total_candidates"] = report.total_candidates;
  j["train_calls"] = report.train_calls;
  j["auc_fallback_nodes"] = report.auc_fallback_nodes;
  return j;
}

inline nlohmann::json bound_report_to_json(const BoundReport& report) {
  using nlohmann::json;
  json j;
  j["delta"] = report.delta;
  j["n_draws"] = report.n_draws;
  j["loss_basis"] = report.loss_basis;
  j["note"] = report.note;
  json terminals = json::array();
  for (const auto& t : report.terminals) {
    terminals.push_back(json{{"terminal", t.terminal},
                             {"s_count", t.s_count},
                             {"empirical_loss", t.empirical_loss},
                             {"max_path_rademacher", t.max_path_rademacher},
                             {"confidence_term", t.confidence_term},
                             {"bound", t.bound},
                             {"included", t.included}});
  }
  j["terminals"] = std::move(terminals);
  if (report.aggregate_valid) {
    j["aggregate_bound"] = report.aggregate_bound;
  } else {
    j["aggregate_bound"] = nullptr;
  }
  return j;
}

/// Training report: tree summary, validation trajectory, per-terminal
/// weights, optional bounds. Contains no timing, so files are reproducible.
inline nlohmann::json training_report_to_json(
    const TrainedModel& trained, const BoundReport* bounds = nullptr) {
  using nlohmann::json;
  const auto& model = trained.model;
  json j;
  j["loss"] = loss_name(model.loss.kind);
  j["seed"] = model.metadata.seed;
  j["partition"] = json{{"s", trained.partition.s.size()},
                        {"v1", trained.partition.v1.size()},
                        {"v2", trained.partition.v2.size()}};
  j["growth"] = growth_report_to_json(trained.growth);
  j["tree"] = json{{"nodes", model.tree.nodes.size()},
                   {"terminals", model.tree.terminal_ids().size()},
                   {"depth", model.tree.depth()}};
  json terminals = json::array();
  for (const auto& e : model.weights.entries) {
    terminals.push_back(json{{"terminal", e.terminal},
                             {"path", e.path},
                             {"weights", e.w},
                             {"delta_t", model.tree.node(e.terminal).delta_t}});
  }
  j["terminals"] = std::move(terminals);
  if (bounds) j["bounds"] = bound_report_to_json(*bounds);
  return j;
}

inline nlohmann::json method_result_to_json(const MethodResult& m) {
  using nlohmann::json;
  json j;
  j["name"] = m.name;
  j["per_run"] = m.per_run;
  j["per_eval"] = m.per_eval;
  j["mean"] = m.mean;
  j["stddev"] = m.stddev;
  if (m.gain_vs_tops) {
    j["gain_vs_tops"] = *m.gain_vs_tops;
  } else {
    j["gain_vs_tops"] = nullptr;
  }
  if (m.p_value) {
    j["p_value"] = *m.p_value;
  } else {
    j["p_value"] = nullptr;
  }
  return j;
}

/// Experiment report. Wall-clock timings are the only non-reproducible
/// fields; pass include_timing=false for byte-comparable output.
inline nlohmann::json experiment_report_to_json(const ExperimentReport& report,
                                                bool include_timing = true) {
  using nlohmann::json;
  json j;
  j["n_runs"] = report.n_runs;
  j["cv_folds"] = report.cv_folds;
  j["tops"] = method_result_to_json(report.tops);
  json baselines = json::array();
  for (const auto& b : report.baselines)
    baselines.push_back(method_result_to_json(b));
  j["baselines"] = std::move(baselines);
  j["loss_fallback_used"] = report.loss_fallback_used;
  j["candidate_evals_per_run"] = report.candidate_evals_per_run;
  j["max_node_candidates"] = report.max_node_candidates;
  j["node_candidate_limit"] = report.node_candidate_limit;
  if (include_timing) j["wall_ms_per_run"] = report.wall_ms_per_run;
  return j;
}

/// Human-readable table of the experiment results.
inline std::string experiment_report_table(const ExperimentReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %10s %10s %8s %10s\n", "method",
                "loss", "stddev", "gain", "p-value");
  os << line;
  std::snprintf(line, sizeof(line), "%-24s %10.6f %10.6f %8s %10s\n",
                report.tops.name.c_str(), report.tops.mean, report.tops.stddev,
                "-", "-");
  os << line;
  for (const auto& b : report.baselines) {
    std::string gain_str = "-";
    std::string p_str = "-";
    if (b.gain_vs_tops) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f%%", *b.gain_vs_tops * 100.0);
      gain_str = buf;
    }
    if (b.p_value) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", *b.p_value);
      p_str = buf;
    }
    std::snprintf(line, sizeof(line), "%-24s %10.6f %10.6f %8s %10s\n",
                  b.name.c_str(), b.mean, b.stddev, gain_str.c_str(),
                  p_str.c_str());
    os << line;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

inline DataSchema data_schema_from_json(const nlohmann::json& j) {
  DataSchema schema;
  try {
    schema.label = j.at("label").get<std::string>();
    if (j.contains("binary"))
      schema.binary = j.at("binary").get<std::vector<std::string>>();
    if (j.contains("label_kind")) {
      const auto kind = j.at("label_kind").get<std::string>();
      if (kind == "binary") {
        schema.label_kind = LabelKind::binary;
      } else if (kind == "real") {
        schema.label_kind = LabelKind::real;
      } else if (kind != "auto") {
        throw ConfigError("label_kind must be binary, real, or auto");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
  return schema;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    config.data_path = j.at("data").get<std::string>();
    config.schema = data_schema_from_json(j.at("schema"));
    if (j.contains("instantiation"))
      config.instantiation = j.at("instantiation").get<std::string>();
    if (j.contains("learners")) {
      config.instantiation = "custom";
      config.custom_learners =
          j.at("learners").get<std::vector<std::string>>();
    }
    if (j.contains("loss"))
      config.loss = parse_loss(j.at("loss").get<std::string>());
    if (j.contains("ratios")) {
      const auto r = j.at("ratios").get<std::vector<double>>();
      if (r.size() != 3) throw ConfigError("ratios must have 3 entries");
      config.ratios = {r[0], r[1], r[2]};
    }
    if (j.contains("test_fraction"))
      config.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("n_runs")) config.n_runs = j.at("n_runs").get<int>();
    if (j.contains("cv_folds")) config.cv_folds = j.at("cv_folds").get<int>();
    if (j.contains("seeds"))
      config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (config.seeds.empty()) {
      for (int i = 0; i < config.n_runs; ++i)
        config.seeds.push_back(static_cast<std::uint64_t>(i + 1));
    }
    if (j.contains("limits")) {
      const auto& l = j.at("limits");
      if (l.contains("max_depth"))
        config.limits.max_depth = l.at("max_depth").get<int>();
      if (l.contains("min_leaf_v1"))
        config.limits.min_leaf_v1 = l.at("min_leaf_v1").get<int>();
      if (l.contains("min_train_samples"))
        config.limits.min_train_samples = l.at("min_train_samples").get<int>();
      if (l.contains("improvement_tol"))
        config.limits.improvement_tol = l.at("improvement_tol").get<double>();
    }
    if (j.contains("weight_fit"))
      config.weight_fit.mode =
          parse_weight_fit_mode(j.at("weight_fit").get<std::string>());
    if (j.contains("baselines")) {
      for (const auto& jb : j.at("baselines"))
        config.baselines.push_back(detail::algorithm_from_json(jb));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  config.validate();
  return config;
}

}  // namespace tops

#endif  // TOPS_HARNESS_HPP
