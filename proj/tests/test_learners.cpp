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
#include "tops/learners.hpp"

using namespace tops;

namespace {

Dataset two_point_line() {
  return Dataset({0.0, 1.0}, {0.0, 1.0}, {{0, "x", FeatureKind::continuous}},
                 LabelKind::real);
}

AlgorithmSpec lr_spec() { return {"lr", LearnerKind::linear_regression, {}}; }

double training_mse(const Predictor& p, const Dataset& data) {
  double sum = 0.0;
  for (int i = 0; i < data.rows(); ++i) {
    const double d = p.score(data.row(i)) - data.label(i);
    sum += d * d;
  }
  return sum / data.rows();
}

double training_error_rate(const Predictor& p, const Dataset& data) {
  int wrong = 0;
  for (int i = 0; i < data.rows(); ++i) {
    if (threshold_class(p.score(data.row(i))) !=
        static_cast<int>(data.label(i)))
      ++wrong;
  }
  return static_cast<double>(wrong) / data.rows();
}

}  // namespace

TEST_CASE("linear regression interpolates two points") {
  const auto data = two_point_line();
  const auto p = train(lr_spec(), data, tops_tests::all_rows(data), 0, 2);
  const std::vector<double> x{0.5};
  CHECK(p.score(x) == doctest::Approx(0.5).epsilon(1e-12));
  const std::vector<double> x0{0.0};
  CHECK(p.score(x0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("linear regression survives a rank-deficient design") {
  // duplicated feature column: the normal system is singular
  Dataset data({0.1, 0.1, 0.4, 0.4, 0.9, 0.9, 0.3, 0.3}, {1.0, 2.0, 3.0, 1.5},
               {{0, "a", FeatureKind::continuous},
                {1, "b", FeatureKind::continuous}},
               LabelKind::real);
  const auto p = train(lr_spec(), data, tops_tests::all_rows(data), 0, 2);
  const auto& m = std::get<LinearModel>(p.state);
  for (double c : m.coef) CHECK(std::isfinite(c));
}

TEST_CASE("linear regression residual orthogonality on full-rank designs") {
  SplitMix64 rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30 + static_cast<int>(rng.below(100));
    const int d = 1 + static_cast<int>(rng.below(6));
    const auto data = tops_tests::regional_regression_dataset(
        n, d, 1000 + trial, 0.05);
    const auto p = train(lr_spec(), data, tops_tests::all_rows(data), 0);
    const auto& coef = std::get<LinearModel>(p.state).coef;
    // max-norm of X^T (y - X beta), scaled by n
    std::vector<double> resid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      resid[static_cast<std::size_t>(i)] = data.label(i) - p.score(data.row(i));
    double max_dot = 0.0;
    for (int j = 0; j <= d; ++j) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) {
        const double xij = j == 0 ? 1.0 : data.feature(i, j - 1);
        dot += xij * resid[static_cast<std::size_t>(i)];
      }
      max_dot = std::max(max_dot, std::abs(dot) / n);
    }
    CHECK(max_dot <= 1e-6);
    (void)coef;
  }
}

TEST_CASE("stump separates a clean threshold") {
  // labels 0 below 0.5, 1 above
  std::vector<double> xs{0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> ys{0, 0, 0, 0, 1, 1, 1, 1};
  Dataset data(std::vector<double>(xs), std::vector<double>(ys),
               {{0, "x", FeatureKind::continuous}}, LabelKind::binary);
  const auto p = train({"stump", LearnerKind::stump, {}}, data,
                       tops_tests::all_rows(data), 0, 2);
  CHECK(training_error_rate(p, data) == 0.0);
}

TEST_CASE("a one-tree depth-0 forest is the constant mean") {
  const auto data = tops_tests::regional_regression_dataset(40, 2, 9);
  AlgorithmSpec spec{"rf1", LearnerKind::random_forest,
                     {{"trees", 1}, {"max_depth", 0}}};
  const auto p = train(spec, data, tops_tests::all_rows(data), 123);
  double mean = 0.0;
  for (int i = 0; i < data.rows(); ++i) mean += data.label(i);
  mean /= data.rows();
  const std::vector<double> x{0.3, 0.8};
  CHECK(p.score(x) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("train and score are deterministic") {
  const auto data = tops_tests::regional_classification_dataset(80, 3, 21);
  for (const auto& spec : instantiation_set("tops_b")) {
    const auto a = train(spec, data, tops_tests::all_rows(data), 777);
    const auto b = train(spec, data, tops_tests::all_rows(data), 777);
    SplitMix64 rng(5);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> x{rng.next_double(), rng.next_double(),
                            rng.next_double()};
      CHECK(a.score(x) == b.score(x));  // bitwise
    }
  }
}

TEST_CASE("every built-in learner beats or matches the constant fit") {
  const auto reg = tops_tests::regional_regression_dataset(150, 3, 31, 0.02);
  double mean = 0.0;
  for (int i = 0; i < reg.rows(); ++i) mean += reg.label(i);
  mean /= reg.rows();
  double const_mse = 0.0;
  for (int i = 0; i < reg.rows(); ++i)
    const_mse += (reg.label(i) - mean) * (reg.label(i) - mean);
  const_mse /= reg.rows();

  for (const char* kind : {"linear_regression", "stump", "tree"}) {
    const auto specs = instantiation_set(std::vector<std::string>{kind});
    const auto p = train(specs[0], reg, tops_tests::all_rows(reg), 3);
    CHECK(training_mse(p, reg) <= const_mse + 1e-9);
  }
  {
    AlgorithmSpec rf{"rf", LearnerKind::random_forest, {{"trees", 30}}};
    const auto p = train(rf, reg, tops_tests::all_rows(reg), 3);
    CHECK(training_mse(p, reg) <= const_mse + 1e-9);
  }

  const auto cls = tops_tests::regional_classification_dataset(150, 3, 32);
  int positives = 0;
  for (int i = 0; i < cls.rows(); ++i)
    positives += static_cast<int>(cls.label(i));
  const double const_err =
      std::min(positives, cls.rows() - positives) / double(cls.rows());
  for (const auto& spec : instantiation_set("tops_b")) {
    const auto p = train(spec, cls, tops_tests::all_rows(cls), 3);
    CHECK(training_error_rate(p, cls) <= const_err + 1e-9);
  }
}

TEST_CASE("adaboost and logitboost fit a regional boundary") {
  const auto data = tops_tests::regional_classification_dataset(300, 3, 41);
  AlgorithmSpec ada{"ada", LearnerKind::adaboost, {{"rounds", 60}}};
  AlgorithmSpec lb{"lb", LearnerKind::adaboost,
                   {{"rounds", 60}, {"logistic", 1}}};
  const auto pa = train(ada, data, tops_tests::all_rows(data), 9);
  const auto pl = train(lb, data, tops_tests::all_rows(data), 9);
  CHECK(training_error_rate(pa, data) < 0.25);
  CHECK(training_error_rate(pl, data) < 0.25);
  CHECK(std::holds_alternative<AdaBoostModel>(pa.state));
  CHECK(std::holds_alternative<LogitBoostModel>(pl.state));
}

TEST_CASE("train rejects too-small samples; score rejects bad dims") {
  const auto data = two_point_line();
  CHECK_THROWS_AS(train(lr_spec(), data, tops_tests::all_rows(data), 0, 10),
                  InsufficientDataError);
  const auto p = train(lr_spec(), data, tops_tests::all_rows(data), 0, 2);
  const std::vector<double> bad{0.5, 0.5};
  CHECK_THROWS_AS(p.score(bad), DataError);
}

TEST_CASE("instantiation sets") {
  CHECK(instantiation_set("tops_lr").size() == 1);
  CHECK(instantiation_set("tops_lr")[0].kind == LearnerKind::linear_regression);
  const auto b = instantiation_set("tops_b");
  CHECK(b.size() == 5);
  const auto custom = instantiation_set(std::vector<std::string>{"stump", "tree"});
  CHECK(custom.size() == 2);
  CHECK(custom[0].kind == LearnerKind::stump);
  CHECK(custom[1].kind == LearnerKind::tree);
  CHECK_THROWS_AS(instantiation_set("nope"), ConfigError);
}

TEST_CASE("logistic regression fits a monotone boundary") {
  std::vector<double> xs;
  std::vector<double> ys;
  for (int i = 0; i < 40; ++i) {
    const double x = (i + 0.5) / 40.0;
    xs.push_back(x);
    ys.push_back(x >= 0.5 ? 1.0 : 0.0);
  }
  Dataset data(std::move(xs), std::move(ys),
               {{0, "x", FeatureKind::continuous}}, LabelKind::binary);
  const auto p = train({"logit", LearnerKind::logistic_regression, {}}, data,
                       tops_tests::all_rows(data), 0);
  CHECK(training_error_rate(p, data) <= 0.05);
  const std::vector<double> lo{0.05};
  const std::vector<double> hi{0.95};
  CHECK(p.score(lo) < 0.5);
  CHECK(p.score(hi) > 0.5);
}
