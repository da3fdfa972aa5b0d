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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "tops/harness.hpp"
#include "tops/inference.hpp"

using namespace tops;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::shared_ptr<const Predictor> constant_predictor(double value,
                                                    int trained_on) {
  Predictor p;
  p.algorithm = "const";
  p.trained_on = trained_on;
  p.dims = 1;
  RegressionTreeModel m;
  m.nodes.push_back({true, value, -1, 0.0, -1, -1});
  p.state = std::move(m);
  return std::make_shared<const Predictor>(std::move(p));
}

/// Hand-built model: root split at 0.5, constant node scores, and fixed path
/// weights [0.25, 0.75] on both paths.
OverallPredictor handmade_model(double root_score, double left_score,
                                double right_score) {
  OverallPredictor model;
  model.features = {{0, "x", FeatureKind::continuous}};
  model.normalization.ranges = {{0.0, 1.0}};
  model.label_name = "y";
  model.label_kind = LabelKind::binary;
  model.loss = LossSpec::of(LossKind::error_rate);
  model.algorithms = {{"const", LearnerKind::tree, {}}};

  NodeRecord root;
  root.id = 0;
  root.parent = -1;
  root.depth = 0;
  root.cell = Cell::root(1);
  root.predictor = constant_predictor(root_score, 0);
  root.split = Split{0, 0.5, 1, 2};
  root.delta_v = 0.01;

  auto cells = root.cell.split(0, 0.5);
  NodeRecord left;
  left.id = 1;
  left.parent = 0;
  left.depth = 1;
  left.cell = cells.first;
  left.predictor = constant_predictor(left_score, 1);
  NodeRecord right;
  right.id = 2;
  right.parent = 0;
  right.depth = 1;
  right.cell = cells.second;
  right.predictor = constant_predictor(right_score, 2);

  model.tree.nodes = {root, left, right};
  model.weights.entries = {{1, {0, 1}, {0.25, 0.75}},
                           {2, {0, 2}, {0.25, 0.75}}};
  return model;
}

}  // namespace

TEST_CASE("a root-only model scores with the root predictor everywhere") {
  OverallPredictor model;
  model.features = {{0, "x", FeatureKind::continuous}};
  model.normalization.ranges = {{0.0, 1.0}};
  model.label_kind = LabelKind::real;
  model.loss = LossSpec::of(LossKind::mae);
  model.algorithms = {{"const", LearnerKind::tree, {}}};
  NodeRecord root;
  root.id = 0;
  root.cell = Cell::root(1);
  root.predictor = constant_predictor(0.42, 0);
  model.tree.nodes = {root};
  model.weights.entries = {{0, {0}, {1.0}}};

  SplitMix64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{rng.next_double()};
    CHECK(predict(model, x) == 0.42);
  }
}

TEST_CASE("predict sums weighted path scores") {
  // weights [0.25, 0.75], node scores [0.2, 0.6] -> 0.5
  const auto model = handmade_model(0.2, 0.9, 0.6);
  const std::vector<double> x{0.8};
  CHECK(predict(model, x) == doctest::Approx(0.25 * 0.2 + 0.75 * 0.6));
}

TEST_CASE("a value equal to the threshold routes to the right child") {
  const auto model = handmade_model(0.0, 0.0, 1.0);
  const std::vector<double> boundary{0.5};
  // right path: 0.25*0.0 + 0.75*1.0
  CHECK(predict(model, boundary) == doctest::Approx(0.75));
  const std::vector<double> below{0.4999};
  CHECK(predict(model, below) == doctest::Approx(0.0));
}

TEST_CASE("classify thresholds at exactly 0.5") {
  // 0.5 and the weights 0.25/0.75 are exact in binary, so the weighted sum
  // is exactly 0.5 and must classify as 1
  const auto model = handmade_model(0.5, 0.9, 0.5);
  const std::vector<double> x{0.8};
  REQUIRE(predict(model, x) == 0.5);
  CHECK(classify(model, x) == 1);

  const auto low = handmade_model(0.4, 0.9, 0.52);  // 0.25*0.4+0.75*0.52=0.49
  CHECK(predict(low, x) == doctest::Approx(0.49));
  CHECK(classify(low, x) == 0);

  const auto high = handmade_model(0.9, 0.9, 0.9);
  CHECK(classify(high, x) == 1);
}

TEST_CASE("same-terminal inputs can receive different classifications") {
  OverallPredictor model;
  model.features = {{0, "x", FeatureKind::continuous}};
  model.normalization.ranges = {{0.0, 1.0}};
  model.label_kind = LabelKind::binary;
  model.loss = LossSpec::of(LossKind::error_rate);
  model.algorithms = {{"lr", LearnerKind::linear_regression, {}}};
  NodeRecord root;
  root.id = 0;
  root.cell = Cell::root(1);
  Predictor p;
  p.algorithm = "lr";
  p.trained_on = 0;
  p.dims = 1;
  p.state = LinearModel{{0.0, 1.0}};  // score = x
  root.predictor = std::make_shared<const Predictor>(std::move(p));
  model.tree.nodes = {root};
  model.weights.entries = {{0, {0}, {1.0}}};

  const std::vector<double> a{0.3};
  const std::vector<double> b{0.7};
  CHECK(model.tree.find_terminal(a) == model.tree.find_terminal(b));
  CHECK(classify(model, a) == 0);
  CHECK(classify(model, b) == 1);
}

TEST_CASE("predict rejects a dimension mismatch") {
  const auto model = handmade_model(0.1, 0.2, 0.3);
  const std::vector<double> bad{0.1, 0.2};
  CHECK_THROWS_AS(predict(model, bad), DataError);
}

TEST_CASE("save/load round trip preserves predictions bitwise") {
  const auto data = tops_tests::regional_regression_dataset(400, 3, 67, 0.02);
  const auto partition = split_partition(data, {0.75, 0.15, 0.10}, 2024);
  const auto algorithms = instantiation_set(
      std::vector<std::string>{"linear_regression", "tree"});
  auto trained = train_tops(data, partition, algorithms,
                            LossSpec::of(LossKind::mse));
  trained.model.label_name = "y";
  trained.model.metadata.seed = 2024;

  const auto path = temp_file("tops_model_roundtrip.json");
  save_model(trained.model, path);
  const auto loaded = load_model(path);

  SplitMix64 rng(99);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(3);
    for (auto& v : x) v = rng.next_double() * 1.4 - 0.2;  // includes clamping range
    CHECK(predict(trained.model, x) == predict(loaded, x));
  }

  // a second save of the loaded model is byte-identical
  const auto path2 = temp_file("tops_model_roundtrip2.json");
  save_model(loaded, path2);
  std::ifstream f1(path), f2(path2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("load_model rejects damaged files") {
  const auto model = handmade_model(0.1, 0.2, 0.3);
  const auto path = temp_file("tops_model_damage.json");
  save_model(model, path);

  SUBCASE("truncated file") {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto full = ss.str();
    std::ofstream out(path, std::ios::trunc);
    out << full.substr(0, full.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_model(path), ModelFormatError);
  }

  SUBCASE("unknown format version names both versions") {
    auto j = model_to_json(model);
    j["format_version"] = 7;
    std::ofstream out(path, std::ios::trunc);
    out << j.dump();
    out.close();
    try {
      load_model(path);
      FAIL("expected a version error");
    } catch (const ModelFormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("7") != std::string::npos);
      CHECK(msg.find("1") != std::string::npos);
    }
  }

  SUBCASE("checksum mismatch") {
    auto j = model_to_json(model);
    j["nodes"][0]["delta_v"] = 0.5;  // tamper without updating the checksum
    std::ofstream out(path, std::ios::trunc);
    out << j.dump();
    out.close();
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("checksum"),
                         ModelFormatError);
  }

  SUBCASE("missing weights for a terminal") {
    auto j = model_to_json(model);
    j["weights"].erase(1);
    j["checksum"] = tops::detail::checksum_of(
        nlohmann::json{{"nodes", j["nodes"]},
                       {"weights", j["weights"]},
                       {"normalization", j["normalization"]}});
    std::ofstream out(path, std::ios::trunc);
    out << j.dump();
    out.close();
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("weight"),
                         ModelFormatError);
  }
}
