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

#ifndef TOPS_INFERENCE_HPP
#define TOPS_INFERENCE_HPP

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tops/dataset.hpp"
#include "tops/errors.hpp"
#include "tops/learners.hpp"
#include "tops/losses.hpp"
#include "tops/path_weights.hpp"
#include "tops/random.hpp"
#include "tops/tree_growth.hpp"

namespace tops {

inline constexpr int kModelFormatVersion = 1;

struct ModelMetadata {
  std::uint64_t seed = 0;
  std::string created;  // left empty by default so files are reproducible
  std::string tool = "tops";
};

/// The deployable model: grown tree, per-path weights, and the feature
/// schema + scaling needed to accept raw inputs.
struct OverallPredictor {
  TreeOfPredictors tree;
  PathWeights weights;
  std::vector<FeatureSpec> features;
  NormalizationParams normalization;
  std::string label_name = "label";
  LabelKind label_kind = LabelKind::real;
  LossSpec loss = LossSpec::of(LossKind::mse);
  std::vector<AlgorithmSpec> algorithms;
  WeightFitMode weight_fit = WeightFitMode::squared_error;
  ModelMetadata metadata;
};

/// Weighted sum of the path predictors' scores at x, after normalizing and
/// clamping the raw input. x_i equal to a split threshold routes right.
inline double predict(const OverallPredictor& model,
                      std::span<const double> raw_x) {
  if (raw_x.size() != model.features.size())
    throw DataError("predict: expected " +
                    std::to_string(model.features.size()) + " features, got " +
                    std::to_string(raw_x.size()));
  std::vector<double> x(raw_x.begin(), raw_x.end());
  normalize_row(model.features, model.normalization, x);

  const int terminal = model.tree.find_terminal(x);
  const PathWeights::Entry* entry = model.weights.find(terminal);
  if (!entry) throw ModelFormatError("no weights for terminal " +
                                     std::to_string(terminal));
  double sum = 0.0;
  for (std::size_t k = 0; k < entry->path.size(); ++k)
    sum += entry->w[k] * model.tree.node(entry->path[k]).predictor->score(x);
  return sum;
}

/// 1 iff the raw weighted score clears 0.5. Scores are not clipped first.
inline int classify(const OverallPredictor& model,
                    std::span<const double> raw_x) {
  return predict(model, raw_x) >= 0.5 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline json algorithm_to_json(const AlgorithmSpec& spec) {
  json j;
  j["id"] = spec.id;
  j["kind"] = learner_kind_name(spec.kind);
  j["params"] = json::object();
  for (const auto& [key, value] : spec.params) j["params"][key] = value;
  return j;
}

inline AlgorithmSpec algorithm_from_json(const json& j) {
  AlgorithmSpec spec;
  spec.id = j.at("id").get<std::string>();
  spec.kind = parse_learner_kind(j.at("kind").get<std::string>());
  if (j.contains("params")) {
    for (const auto& [key, value] : j.at("params").items())
      spec.params[key] = value.get<double>();
  }
  return spec;
}

inline json tree_model_to_json(const RegressionTreeModel& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    json jn;
    jn["leaf"] = n.leaf;
    if (n.leaf) {
      jn["value"] = n.value;
    } else {
      jn["feature"] = n.feature;
      jn["threshold"] = n.threshold;
      jn["left"] = n.left;
      jn["right"] = n.right;
      jn["value"] = n.value;
    }
    nodes.push_back(std::move(jn));
  }
  return json{{"nodes", std::move(nodes)}};
}

inline RegressionTreeModel tree_model_from_json(const json& j) {
  RegressionTreeModel m;
  for (const auto& jn : j.at("nodes")) {
    RegressionTreeModel::Node n;
    n.leaf = jn.at("leaf").get<bool>();
    n.value = jn.at("value").get<double>();
    if (!n.leaf) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    m.nodes.push_back(n);
  }
  if (m.nodes.empty()) throw ModelFormatError("tree model with no nodes");
  return m;
}

inline json state_to_json(const ModelState& state) {
  json j;
  if (const auto* lin = std::get_if<LinearModel>(&state)) {
    j["kind"] = "linear";
    j["coef"] = lin->coef;
  } else if (const auto* logit = std::get_if<LogisticModel>(&state)) {
    j["kind"] = "logistic";
    j["coef"] = logit->coef;
  } else if (const auto* tree = std::get_if<RegressionTreeModel>(&state)) {
    j["kind"] = "tree";
    j["model"] = tree_model_to_json(*tree);
  } else if (const auto* forest = std::get_if<ForestModel>(&state)) {
    j["kind"] = "forest";
    json trees = json::array();
    for (const auto& t : forest->trees) trees.push_back(tree_model_to_json(t));
    j["trees"] = std::move(trees);
  } else if (const auto* ada = std::get_if<AdaBoostModel>(&state)) {
    j["kind"] = "adaboost";
    j["alpha_sum"] = ada->alpha_sum;
    json rounds = json::array();
    for (const auto& r : ada->rounds) {
      rounds.push_back(json{{"constant", r.constant},
                            {"constant_vote", r.constant_vote},
                            {"feature", r.feature},
                            {"threshold", r.threshold},
                            {"polarity", r.polarity},
                            {"alpha", r.alpha}});
    }
    j["rounds"] = std::move(rounds);
  } else if (const auto* lb = std::get_if<LogitBoostModel>(&state)) {
    j["kind"] = "logitboost";
    json rounds = json::array();
    for (const auto& r : lb->rounds) {
      rounds.push_back(json{{"constant", r.constant},
                            {"value", r.value},
                            {"feature", r.feature},
                            {"threshold", r.threshold},
                            {"left_value", r.left_value},
                            {"right_value", r.right_value}});
    }
    j["rounds"] = std::move(rounds);
  }
  return j;
}

inline ModelState state_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    LinearModel m;
    m.coef = j.at("coef").get<std::vector<double>>();
    return m;
  }
  if (kind == "logistic") {
    LogisticModel m;
    m.coef = j.at("coef").get<std::vector<double>>();
    return m;
  }
  if (kind == "tree") return tree_model_from_json(j.at("model"));
  if (kind == "forest") {
    ForestModel m;
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_model_from_json(t));
    if (m.trees.empty()) throw ModelFormatError("forest with no trees");
    return m;
  }
  if (kind == "adaboost") {
    AdaBoostModel m;
    m.alpha_sum = j.at("alpha_sum").get<double>();
    for (const auto& jr : j.at("rounds")) {
      AdaBoostModel::Round r;
      r.constant = jr.at("constant").get<bool>();
      r.constant_vote = jr.at("constant_vote").get<int>();
      r.feature = jr.at("feature").get<int>();
      r.threshold = jr.at("threshold").get<double>();
      r.polarity = jr.at("polarity").get<int>();
      r.alpha = jr.at("alpha").get<double>();
      m.rounds.push_back(r);
    }
    return m;
  }
  if (kind == "logitboost") {
    LogitBoostModel m;
    for (const auto& jr : j.at("rounds")) {
      LogitBoostModel::Round r;
      r.constant = jr.at("constant").get<bool>();
      r.value = jr.at("value").get<double>();
      r.feature = jr.at("feature").get<int>();
      r.threshold = jr.at("threshold").get<double>();
      r.left_value = jr.at("left_value").get<double>();
      r.right_value = jr.at("right_value").get<double>();
      m.rounds.push_back(r);
    }
    return m;
  }
  throw ModelFormatError("unknown predictor state kind '" + kind + "'");
}

inline json predictor_to_json(const Predictor& p) {
  json j;
  j["algorithm"] = p.algorithm;
  j["trained_on"] = p.trained_on;
  j["dims"] = p.dims;
  j["state"] = state_to_json(p.state);
  return j;
}

inline Predictor predictor_from_json(const json& j) {
  Predictor p;
  p.algorithm = j.at("algorithm").get<std::string>();
  p.trained_on = j.at("trained_on").get<int>();
  p.dims = j.at("dims").get<int>();
  p.state = state_from_json(j.at("state"));
  return p;
}

inline std::string checksum_of(const json& payload) {
  std::ostringstream hex;
  hex << std::hex << fnv1a64(payload.dump());
  return hex.str();
}

}  // namespace detail

inline nlohmann::json model_to_json(const OverallPredictor& model) {
  using nlohmann::json;
  json j;
  j["format_version"] = kModelFormatVersion;
  j["loss"] = loss_name(model.loss.kind);

  json norm;
  norm["label"] = model.label_name;
  norm["label_kind"] =
      model.label_kind == LabelKind::binary ? "binary" : "real";
  json features = json::array();
  for (std::size_t i = 0; i < model.features.size(); ++i) {
    const auto& f = model.features[i];
    const auto& r = model.normalization.ranges[i];
    features.push_back(
        json{{"index", f.index},
             {"name", f.name},
             {"kind", f.kind == FeatureKind::binary ? "binary" : "continuous"},
             {"min", r.min},
             {"max", r.max}});
  }
  norm["features"] = std::move(features);
  j["normalization"] = std::move(norm);

  json algorithms = json::array();
  for (const auto& a : model.algorithms)
    algorithms.push_back(detail::algorithm_to_json(a));
  j["algorithms"] = std::move(algorithms);

  json nodes = json::array();
  for (const auto& n : model.tree.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["parent"] = n.parent;
    jn["depth"] = n.depth;
    json lo = nlohmann::json::array();
    json hi = nlohmann::json::array();
    for (const auto& b : n.cell.bounds()) {
      lo.push_back(b.lo);
      hi.push_back(b.hi);
    }
    jn["cell"] = json{{"lo", std::move(lo)}, {"hi", std::move(hi)}};
    if (n.split) {
      jn["split"] = json{{"feature", n.split->feature},
                         {"threshold", n.split->threshold},
                         {"left", n.split->left},
                         {"right", n.split->right}};
    } else {
      jn["split"] = nullptr;
    }
    jn["predictor"] = detail::predictor_to_json(*n.predictor);
    jn["delta_v"] = n.delta_v;
    jn["delta_t"] = n.delta_t;
    jn["auc_fallback"] = n.auc_fallback;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);

  json weights = json::array();
  for (const auto& e : model.weights.entries) {
    weights.push_back(
        json{{"terminal", e.terminal}, {"path", e.path}, {"w", e.w}});
  }
  j["weights"] = std::move(weights);

  j["metadata"] = json{{"seed", model.metadata.seed},
                       {"created", model.metadata.created},
                       {"tool", model.metadata.tool},
                       {"weight_fit", weight_fit_mode_name(model.weight_fit)}};
  j["checksum"] = detail::checksum_of(
      json{{"nodes", j["nodes"]}, {"weights", j["weights"]},
           {"normalization", j["normalization"]}});
  return j;
}

inline OverallPredictor model_from_json(const nlohmann::json& j) {
  using nlohmann::json;
  if (!j.contains("format_version"))
    throw ModelFormatError("not a model file: no format_version");
  const int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion)
    throw ModelFormatError("model format version " + std::to_string(version) +
                           " unsupported; this build reads version " +
                           std::to_string(kModelFormatVersion));
  if (j.contains("checksum")) {
    const std::string expected = detail::checksum_of(
        json{{"nodes", j.at("nodes")}, {"weights", j.at("weights")},
             {"normalization", j.at("normalization")}});
    if (j.at("checksum").get<std::string>() != expected)
      throw ModelFormatError("model checksum mismatch");
  }

  OverallPredictor model;
  try {
    model.loss = parse_loss(j.at("loss").get<std::string>());

    const auto& norm = j.at("normalization");
    model.label_name = norm.at("label").get<std::string>();
    model.label_kind = norm.at("label_kind").get<std::string>() == "binary"
                           ? LabelKind::binary
                           : LabelKind::real;
    for (const auto& jf : norm.at("features")) {
      FeatureSpec f;
      f.index = jf.at("index").get<int>();
      f.name = jf.at("name").get<std::string>();
      f.kind = jf.at("kind").get<std::string>() == "binary"
                   ? FeatureKind::binary
                   : FeatureKind::continuous;
      model.features.push_back(std::move(f));
      model.normalization.ranges.push_back(
          {jf.at("min").get<double>(), jf.at("max").get<double>()});
    }

    for (const auto& ja : j.at("algorithms"))
      model.algorithms.push_back(detail::algorithm_from_json(ja));

    for (const auto& jn : j.at("nodes")) {
      NodeRecord n;
      n.id = jn.at("id").get<int>();
      n.parent = jn.at("parent").get<int>();
      n.depth = jn.at("depth").get<int>();
      const auto lo = jn.at("cell").at("lo").get<std::vector<double>>();
      const auto hi = jn.at("cell").at("hi").get<std::vector<double>>();
      if (lo.size() != hi.size() || lo.size() != model.features.size())
        throw ModelFormatError("node cell dimensionality mismatch");
      std::vector<Cell::Interval> bounds(lo.size());
      for (std::size_t i = 0; i < lo.size(); ++i) bounds[i] = {lo[i], hi[i]};
      n.cell = Cell(std::move(bounds));
      if (!jn.at("split").is_null()) {
        const auto& js = jn.at("split");
        n.split = Split{js.at("feature").get<int>(),
                        js.at("threshold").get<double>(),
                        js.at("left").get<int>(), js.at("right").get<int>()};
      }
      n.predictor = std::make_shared<const Predictor>(
          detail::predictor_from_json(jn.at("predictor")));
      n.delta_v = jn.at("delta_v").get<double>();
      n.delta_t = jn.at("delta_t").get<double>();
      n.auc_fallback = jn.at("auc_fallback").get<bool>();
      model.tree.nodes.push_back(std::move(n));
    }

    for (const auto& jw : j.at("weights")) {
      PathWeights::Entry e;
      e.terminal = jw.at("terminal").get<int>();
      e.path = jw.at("path").get<std::vector<int>>();
      e.w = jw.at("w").get<std::vector<double>>();
      model.weights.entries.push_back(std::move(e));
    }

    const auto& meta = j.at("metadata");
    model.metadata.seed = meta.at("seed").get<std::uint64_t>();
    model.metadata.created = meta.at("created").get<std::string>();
    model.metadata.tool = meta.at("tool").get<std::string>();
    if (meta.contains("weight_fit"))
      model.weight_fit =
          parse_weight_fit_mode(meta.at("weight_fit").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  }

  // Structural validation.
  const int n_nodes = static_cast<int>(model.tree.nodes.size());
  if (n_nodes == 0) throw ModelFormatError("model has no nodes");
  for (int i = 0; i < n_nodes; ++i) {
    const auto& n = model.tree.nodes[static_cast<std::size_t>(i)];
    if (n.id != i) throw ModelFormatError("node ids must be dense 0..n-1");
    if (n.split) {
      if (n.split->left < 0 || n.split->left >= n_nodes ||
          n.split->right < 0 || n.split->right >= n_nodes)
        throw ModelFormatError("split references a missing child node");
    }
  }
  for (int t : model.tree.terminal_ids()) {
    const auto* e = model.weights.find(t);
    if (!e) throw ModelFormatError("terminal " + std::to_string(t) +
                                   " has no weight vector");
    if (e->path.empty() || e->path.size() != e->w.size())
      throw ModelFormatError("weight vector shape mismatch for terminal " +
                             std::to_string(t));
    double sum = 0.0;
    for (double w : e->w) {
      if (w < 0.0) throw ModelFormatError("negative path weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ModelFormatError("path weights do not sum to 1");
  }
  return model;
}

/// Writes the model as a versioned, checksummed JSON document.
inline void save_model(const OverallPredictor& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline OverallPredictor load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("cannot parse '") + path +
                           "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace tops

#endif  // TOPS_INFERENCE_HPP
