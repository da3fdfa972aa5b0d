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
#include <string>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "tops/harness.hpp"

using namespace tops;

namespace {

ExperimentConfig piecewise_config(int n_runs) {
  ExperimentConfig config;
  config.instantiation = "tops_lr";
  config.loss = LossSpec::of(LossKind::mae);
  config.n_runs = n_runs;
  config.test_fraction = 0.2;
  for (int i = 0; i < n_runs; ++i)
    config.seeds.push_back(static_cast<std::uint64_t>(100 + i));
  config.baselines.push_back({"lr_global", LearnerKind::linear_regression, {}});
  config.limits.max_depth = 6;
  return config;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("gain reproduces the reference ratios") {
  CHECK(gain(0.0152, 0.0167) == doctest::Approx(0.090).epsilon(0.012));
  CHECK(gain(0.0152, 0.0167) * 100.0 == doctest::Approx(9.0).epsilon(0.012));
  CHECK(gain(0.0428, 0.0488) * 100.0 == doctest::Approx(12.3).epsilon(0.01));
  CHECK(gain(0.3, 0.3) == 0.0);
  CHECK_THROWS_AS(gain(0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(gain(0.1, -0.5), ConfigError);
}

TEST_CASE("gain is positive exactly when tops loss is lower") {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = 0.01 + rng.next_double();
    const double b = 0.01 + rng.next_double();
    if (a < b) {
      CHECK(gain(a, b) > 0.0);
    } else if (a > b) {
      CHECK(gain(a, b) < 0.0);
    }
  }
}

TEST_CASE("t_test degenerate rules and symmetry") {
  const std::vector<double> same{1.0, 1.0, 1.0, 1.0, 1.0};
  const std::vector<double> twos{2.0, 2.0, 2.0, 2.0, 2.0};
  CHECK(t_test(same, same) == 1.0);
  CHECK(t_test(same, twos) == 0.0);

  SplitMix64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(8), b(6);
    for (auto& v : a) v = rng.next_gaussian();
    for (auto& v : b) v = 0.4 + rng.next_gaussian();
    const double pab = t_test(a, b);
    const double pba = t_test(b, a);
    CHECK(pab == doctest::Approx(pba).epsilon(1e-14));
    CHECK(pab >= 0.0);
    CHECK(pab <= 1.0);
  }

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(t_test(one, same), ConfigError);
}

TEST_CASE("t_test matches direct numerical integration of the t density") {
  // two 10-point Gaussian-like fixtures
  const std::vector<double> a{0.21, 0.25, 0.19, 0.22, 0.24,
                              0.20, 0.23, 0.26, 0.18, 0.22};
  const std::vector<double> b{0.24, 0.28, 0.22, 0.25, 0.27,
                              0.23, 0.26, 0.29, 0.21, 0.26};
  // recompute the statistic independently
  const double ma = sample_mean(a);
  const double mb = sample_mean(b);
  double ssa = 0, ssb = 0;
  for (double v : a) ssa += (v - ma) * (v - ma);
  for (double v : b) ssb += (v - mb) * (v - mb);
  const double nu = 18.0;
  const double sp2 = (ssa + ssb) / nu;
  const double t = (ma - mb) / std::sqrt(sp2 * (2.0 / 10.0));

  const double p_expected = tops_tests::t_test_p_by_quadrature(t, nu);
  const double p_got = t_test(a, b);
  CHECK(std::abs(p_got - p_expected) <= 1e-6);

  // a second fixture with a large gap
  std::vector<double> c;
  std::vector<double> d;
  SplitMix64 rng(5);
  for (int i = 0; i < 10; ++i) {
    c.push_back(0.1 + 0.01 * rng.next_gaussian());
    d.push_back(0.2 + 0.01 * rng.next_gaussian());
  }
  const double p_cd = t_test(c, d);
  CHECK(p_cd < 0.001);
}

TEST_CASE("train_tops rejects classification losses on real labels") {
  const auto data = tops_tests::piecewise_dataset(200, 3);
  const auto partition = split_partition(data, {0.75, 0.15, 0.10}, 1);
  CHECK_THROWS_WITH_AS(
      train_tops(data, partition, instantiation_set("tops_lr"),
                 LossSpec::of(LossKind::one_minus_auc)),
      doctest::Contains("incompatible"), ConfigError);
}

TEST_CASE("run_experiment is deterministic apart from wall time") {
  const auto data = tops_tests::piecewise_dataset(300, 9);
  auto config = piecewise_config(2);
  const auto r1 = run_experiment(config, data);
  const auto r2 = run_experiment(config, data);
  CHECK(experiment_report_to_json(r1, false).dump() ==
        experiment_report_to_json(r2, false).dump());
}

TEST_CASE("ToPs/LR beats a global linear baseline on piecewise data") {
  const auto data = tops_tests::piecewise_dataset(400, 29);
  auto config = piecewise_config(3);
  const auto report = run_experiment(config, data);
  REQUIRE(report.baselines.size() == 1);
  CHECK(report.tops.mean < report.baselines[0].mean);
  REQUIRE(report.baselines[0].gain_vs_tops.has_value());
  CHECK(*report.baselines[0].gain_vs_tops > 0.0);
  REQUIRE(report.baselines[0].p_value.has_value());
  CHECK(*report.baselines[0].p_value >= 0.0);
  CHECK(report.max_node_candidates <= report.node_candidate_limit);
}

TEST_CASE("cross-validation records runs x folds evaluations") {
  const auto data = tops_tests::piecewise_dataset(250, 33);
  auto config = piecewise_config(2);
  config.cv_folds = 3;
  const auto report = run_experiment(config, data);
  CHECK(report.tops.per_eval.size() == 6);
  CHECK(report.tops.per_run.size() == 2);
  for (const auto& b : report.baselines) CHECK(b.per_eval.size() == 6);
}

TEST_CASE("ten runs of 5-fold cross-validation yield 50 evaluations") {
  const auto data = tops_tests::piecewise_dataset(250, 35);
  auto config = piecewise_config(10);
  config.cv_folds = 5;
  config.limits.max_depth = 3;
  const auto report = run_experiment(config, data);
  CHECK(report.tops.per_eval.size() == 50);
  CHECK(report.tops.per_run.size() == 10);
}

TEST_CASE("single-run experiments omit p-values") {
  const auto data = tops_tests::piecewise_dataset(200, 41);
  auto config = piecewise_config(1);
  const auto report = run_experiment(config, data);
  CHECK_FALSE(report.baselines[0].p_value.has_value());
  const auto j = experiment_report_to_json(report, false);
  CHECK(j["baselines"][0]["p_value"].is_null());
}

TEST_CASE("config validation") {
  auto config = piecewise_config(2);
  config.seeds.pop_back();
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = piecewise_config(2);
  config.cv_folds = 1;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = piecewise_config(2);
  config.test_fraction = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);

  CHECK_THROWS_AS(
      experiment_config_from_json(nlohmann::json{{"data", "x.csv"}}),
      ConfigError);
}

TEST_CASE("export_dot renders a root-only tree as a single node") {
  const auto data = tops_tests::piecewise_dataset(120, 51);
  const auto partition = split_partition(data, {0.75, 0.15, 0.10}, 4);
  GrowthOptions opt;
  opt.max_depth = 0;
  auto trained = train_tops(data, partition, instantiation_set("tops_lr"),
                            LossSpec::of(LossKind::mae), opt);
  const auto dot = export_dot(trained.model);
  CHECK(tops_tests::looks_like_valid_dot(dot));
  CHECK(count_occurrences(dot, "->") == 0);
  CHECK(count_occurrences(dot, "n0 [") == 1);
}

TEST_CASE("export_dot labels splits, deltas, and highlighted weights") {
  const auto data = tops_tests::regional_regression_dataset(500, 3, 61, 0.02);
  const auto partition = split_partition(data, {0.70, 0.20, 0.10}, 6);
  auto trained = train_tops(data, partition, instantiation_set("tops_lr"),
                            LossSpec::of(LossKind::mse));
  REQUIRE(trained.model.tree.nodes.size() >= 3);

  const auto dot = export_dot(trained.model);
  CHECK(tops_tests::looks_like_valid_dot(dot));

  int non_terminals = 0;
  int terminals = 0;
  for (const auto& n : trained.model.tree.nodes) {
    if (n.is_terminal()) {
      ++terminals;
    } else {
      ++non_terminals;
      CHECK(n.delta_v > 0.0);
    }
  }
  CHECK(count_occurrences(dot, "\xCE\x94v = ") == non_terminals);
  CHECK(count_occurrences(dot, "\xCE\x94t = ") == terminals);

  const int some_terminal = trained.model.tree.terminal_ids().front();
  const auto highlighted = export_dot(trained.model, some_terminal);
  CHECK(tops_tests::looks_like_valid_dot(highlighted));
  CHECK(count_occurrences(highlighted, "w = ") >= 2);
  CHECK(count_occurrences(highlighted, "penwidth=2") >= 1);

  CHECK_THROWS_AS(export_dot(trained.model, 9999), ConfigError);
  if (!trained.model.tree.node(0).is_terminal())
    CHECK_THROWS_AS(export_dot(trained.model, 0), ConfigError);
}

TEST_CASE("training report JSON carries trajectory and terminals") {
  const auto data = tops_tests::regional_regression_dataset(400, 3, 71, 0.02);
  const auto partition = split_partition(data, {0.75, 0.15, 0.10}, 8);
  auto trained = train_tops(data, partition, instantiation_set("tops_lr"),
                            LossSpec::of(LossKind::mse));
  const auto j = training_report_to_json(trained);
  CHECK(j["growth"]["v1_trajectory"].size() ==
        trained.growth.splits.size() + 1);
  CHECK(j["terminals"].size() == trained.model.tree.terminal_ids().size());
  CHECK(j["partition"]["s"].get<int>() == 300);
}
