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

#include <cmath>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "tops/path_weights.hpp"

using namespace tops;

namespace {

double weighted_mse(const std::vector<std::vector<double>>& scores,
                    const std::vector<double>& labels,
                    const std::vector<double>& w) {
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double pred = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) pred += w[k] * scores[k][i];
    sum += (pred - labels[i]) * (pred - labels[i]);
  }
  return sum / static_cast<double>(labels.size());
}

void check_simplex(const std::vector<double>& w) {
  double sum = 0.0;
  for (double v : w) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

}  // namespace

TEST_CASE("projection onto the simplex") {
  const auto w = project_to_simplex({0.4, 0.3, 0.3});
  check_simplex(w);
  CHECK(w[0] == doctest::Approx(0.4));

  const auto clipped = project_to_simplex({2.0, -1.0});
  check_simplex(clipped);
  CHECK(clipped[0] == doctest::Approx(1.0));
  CHECK(clipped[1] == doctest::Approx(0.0));
}

TEST_CASE("a single-node path gets weight one") {
  const auto w = fit_simplex_weights({{0.3, 0.7, 0.1}}, std::vector<double>{
                                         0.2, 0.8, 0.4});
  REQUIRE(w.size() == 1);
  CHECK(w[0] == 1.0);
}

TEST_CASE("the better predictor on a two-node path gets more weight") {
  SplitMix64 rng(31);
  std::vector<double> labels(60);
  std::vector<std::vector<double>> scores(2, std::vector<double>(60));
  for (int i = 0; i < 60; ++i) {
    labels[static_cast<std::size_t>(i)] = rng.next_double();
    // node 2 matches the labels exactly; node 1 is noisy
    scores[1][static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)];
    scores[0][static_cast<std::size_t>(i)] =
        labels[static_cast<std::size_t>(i)] + 0.3 * rng.next_gaussian();
  }
  const auto w = fit_simplex_weights(scores, labels);
  check_simplex(w);
  CHECK(w[1] >= w[0]);

  const double fitted = weighted_mse(scores, labels, w);
  CHECK(fitted <= weighted_mse(scores, labels, {1.0, 0.0}) + 1e-12);
  CHECK(fitted <= weighted_mse(scores, labels, {0.0, 1.0}) + 1e-12);

  // grid oracle on the 1-simplex
  const auto [gw, gloss] = tops_tests::simplex_grid_oracle(scores, labels, 100);
  CHECK(fitted <= gloss + 1e-4);
}

TEST_CASE("fitted weights beat every vertex and the 0.01 grid") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(2));  // paths of length 2..3
    const int n = 20 + static_cast<int>(rng.below(40));
    std::vector<double> labels(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> scores(
        static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = rng.next_double();
      for (int j = 0; j < k; ++j)
        scores[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
            labels[static_cast<std::size_t>(i)] +
            (0.1 + 0.4 * j) * rng.next_gaussian();
    }
    const auto w = fit_simplex_weights(scores, labels);
    check_simplex(w);
    const double fitted = weighted_mse(scores, labels, w);

    for (int j = 0; j < k; ++j) {
      std::vector<double> vertex(static_cast<std::size_t>(k), 0.0);
      vertex[static_cast<std::size_t>(j)] = 1.0;
      CHECK(fitted <= weighted_mse(scores, labels, vertex) + 1e-12);
    }
    const auto [gw, gloss] =
        tops_tests::simplex_grid_oracle(scores, labels, 100);
    CHECK(fitted <= gloss + 1e-4);
  }
}

TEST_CASE("optimize_weights on a grown tree") {
  const auto data = tops_tests::regional_regression_dataset(500, 3, 19, 0.02);
  const auto rows = tops_tests::all_rows(data);
  std::vector<int> s(rows.begin(), rows.begin() + 300);
  std::vector<int> v1(rows.begin() + 300, rows.begin() + 400);
  std::vector<int> v2(rows.begin() + 400, rows.end());

  const auto grown =
      grow(data, s, v1, {{"lr", LearnerKind::linear_regression, {}}},
           LossSpec::of(LossKind::mse));
  const auto weights =
      optimize_weights(grown.tree, data, v2, LossSpec::of(LossKind::mse));

  const auto terminals = grown.tree.terminal_ids();
  REQUIRE(weights.entries.size() == terminals.size());
  for (int t : terminals) {
    const auto* entry = weights.find(t);
    REQUIRE(entry != nullptr);
    CHECK(entry->path.front() == 0);
    CHECK(entry->path.back() == t);
    CHECK(entry->path.size() == entry->w.size());
    check_simplex(entry->w);

    // fitted loss never worse than the best single node on the path
    const auto v2_rows = restrict_rows(v2, data, grown.tree.node(t).cell);
    if (v2_rows.empty()) continue;
    std::vector<double> labels;
    std::vector<std::vector<double>> scores(entry->path.size());
    for (std::size_t p = 0; p < entry->path.size(); ++p) {
      for (int r : v2_rows)
        scores[p].push_back(
            grown.tree.node(entry->path[p]).predictor->score(data.row(r)));
    }
    for (int r : v2_rows) labels.push_back(data.label(r));
    const double fitted = weighted_mse(scores, labels, entry->w);
    for (std::size_t p = 0; p < entry->path.size(); ++p) {
      std::vector<double> vertex(entry->path.size(), 0.0);
      vertex[p] = 1.0;
      CHECK(fitted <= weighted_mse(scores, labels, vertex) + 1e-12);
    }
  }
}

TEST_CASE("empty V2 restriction falls back to uniform weights") {
  const auto data = tops_tests::piecewise_dataset(200, 47);
  const auto rows = tops_tests::all_rows(data);
  std::vector<int> s(rows.begin(), rows.begin() + 150);
  std::vector<int> v1(rows.begin() + 150, rows.end());
  const auto grown =
      grow(data, s, v1, {{"lr", LearnerKind::linear_regression, {}}},
           LossSpec::of(LossKind::mae));
  REQUIRE(grown.tree.nodes.size() >= 3);

  const std::vector<int> empty_v2;
  const auto weights = optimize_weights(grown.tree, data, empty_v2,
                                        LossSpec::of(LossKind::mae));
  for (const auto& entry : weights.entries) {
    const double uniform = 1.0 / static_cast<double>(entry.path.size());
    for (double w : entry.w) CHECK(w == doctest::Approx(uniform));
  }
}

TEST_CASE("a deeper node does not automatically get the largest weight") {
  // terminal (deeper) predictor is worse on V2 than the root predictor
  std::vector<double> labels(40);
  std::vector<std::vector<double>> scores(2, std::vector<double>(40));
  SplitMix64 rng(88);
  for (int i = 0; i < 40; ++i) {
    labels[static_cast<std::size_t>(i)] = rng.next_double();
    scores[0][static_cast<std::size_t>(i)] =
        labels[static_cast<std::size_t>(i)];  // root: perfect
    scores[1][static_cast<std::size_t>(i)] =
        1.0 - labels[static_cast<std::size_t>(i)];  // terminal: inverted
  }
  const auto w = fit_simplex_weights(scores, labels);
  check_simplex(w);
  CHECK(w[1] < w[0]);  // terminal weight is not the maximum
}

TEST_CASE("gridsearch mode optimizes the configured loss directly") {
  SplitMix64 rng(13);
  const int n = 80;
  std::vector<double> labels(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> scores(2, std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    const double y = rng.next() & 1 ? 1.0 : 0.0;
    labels[static_cast<std::size_t>(i)] = y;
    scores[0][static_cast<std::size_t>(i)] = 0.5 + 0.1 * rng.next_gaussian();
    scores[1][static_cast<std::size_t>(i)] =
        y * 0.8 + 0.1 + 0.05 * rng.next_gaussian();
  }
  const auto spec = LossSpec::of(LossKind::one_minus_auc);
  const auto w = fit_weights_gridsearch(scores, labels, spec);
  check_simplex(w);

  ScoredSet combined;
  combined.labels = labels;
  combined.scores.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    combined.scores[static_cast<std::size_t>(i)] =
        w[0] * scores[0][static_cast<std::size_t>(i)] +
        w[1] * scores[1][static_cast<std::size_t>(i)];
  const double fitted = loss(spec, combined);

  for (int j = 0; j < 2; ++j) {
    ScoredSet vertex;
    vertex.labels = labels;
    vertex.scores = scores[static_cast<std::size_t>(j)];
    CHECK(fitted <= loss(spec, vertex) + 1e-12);
  }
}
