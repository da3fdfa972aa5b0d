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

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tops/tops.hpp"

namespace {

// Exit codes: 0 ok, 2 usage/config, 3 data, 4 training.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTrain = 4;

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("TOPS_LOG");
    if (!env) return 1;  // warn
    const std::string v = env;
    if (v == "error") return 0;
    if (v == "warn") return 1;
    if (v == "info") return 2;
    if (v == "debug") return 3;
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "[tops] %s\n", msg.c_str());
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tops::DataError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    std::string detail = e.what();
    // nlohmann reports "... at line L, column C" for parse errors; keep it.
    throw tops::ConfigError("cannot parse '" + path + "': " + detail);
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tops::DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw tops::DataError("failed writing '" + path + "'");
}

tops::DataSchema schema_from_flags(const std::string& schema_path,
                                   const std::string& label,
                                   const std::string& binary_csv) {
  tops::DataSchema schema;
  if (!schema_path.empty()) {
    schema = tops::data_schema_from_json(read_json_file(schema_path));
  }
  if (!label.empty()) schema.label = label;
  if (!binary_csv.empty()) schema.binary = split_list(binary_csv);
  if (schema.label.empty())
    throw tops::ConfigError("no label column: pass --schema or --label");
  return schema;
}

std::vector<tops::AlgorithmSpec> learners_from_flag(const std::string& flag) {
  if (flag == "tops_lr" || flag == "tops_b")
    return tops::instantiation_set(flag);
  return tops::instantiation_set(split_list(flag));
}

/// Reads a CSV and extracts the model's feature columns by name, in model
/// order. Extra columns (including the label) are ignored.
std::vector<std::vector<double>> load_feature_rows(
    const std::string& path, const std::vector<tops::FeatureSpec>& features) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tops::DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw tops::DataError("'" + path + "' is empty");
  const auto header = tops::detail::split_csv_record(line, 1);
  std::vector<std::string> names;
  for (const auto& h : header) names.push_back(tops::detail::trim(h));

  std::vector<int> columns;
  for (const auto& f : features) {
    int col = -1;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == f.name) col = static_cast<int>(j);
    }
    if (col < 0)
      throw tops::DataError("column '" + f.name + "' missing from '" + path +
                            "'");
    columns.push_back(col);
  }

  std::vector<std::vector<double>> rows;
  int file_line = 1;
  while (std::getline(in, line)) {
    ++file_line;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto record = tops::detail::split_csv_record(line, file_line);
    if (record.size() != names.size())
      throw tops::DataError("line " + std::to_string(file_line) + " has " +
                            std::to_string(record.size()) +
                            " fields, expected " + std::to_string(names.size()));
    std::vector<double> x;
    x.reserve(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
      x.push_back(tops::detail::parse_cell(
          record[static_cast<std::size_t>(columns[k])], file_line,
          features[k].name));
    }
    rows.push_back(std::move(x));
  }
  return rows;
}

struct TrainArgs {
  std::string data;
  std::string schema;
  std::string label;
  std::string binary;
  std::string learners = "tops_lr";
  std::string loss = "mse";
  std::string out;
  std::string report;
  std::string ratios = "0.75,0.15,0.10";
  std::string weight_fit = "squared_error";
  std::uint64_t seed = 0;
  bool bounds = false;
  double bounds_delta = 0.05;
  int bounds_draws = 20;
  int max_depth = 20;
  int min_leaf_v1 = 5;
  int min_train_samples = 10;
  double improvement_tol = 1e-9;
  int jobs = 1;
};

int run_train(const TrainArgs& args) {
  const auto schema = schema_from_flags(args.schema, args.label, args.binary);
  const auto algorithms = learners_from_flag(args.learners);
  const auto loss_spec = tops::parse_loss(args.loss);

  const auto ratio_list = split_list(args.ratios);
  if (ratio_list.size() != 3)
    throw tops::ConfigError("--ratios needs three comma-separated values");
  std::array<double, 3> ratios{};
  for (int i = 0; i < 3; ++i) {
    try {
      ratios[static_cast<std::size_t>(i)] =
          std::stod(ratio_list[static_cast<std::size_t>(i)]);
    } catch (const std::exception&) {
      throw tops::ConfigError("--ratios: '" +
                              ratio_list[static_cast<std::size_t>(i)] +
                              "' is not a number");
    }
  }

  log_info("loading " + args.data);
  const auto data = tops::load_csv(args.data, schema);
  const auto partition = tops::split_partition(data, ratios, args.seed);

  tops::GrowthOptions growth;
  growth.max_depth = args.max_depth;
  growth.min_leaf_v1 = args.min_leaf_v1;
  growth.min_train_samples = args.min_train_samples;
  growth.improvement_tol = args.improvement_tol;
  growth.jobs = args.jobs;
  growth.seed = args.seed;

  tops::WeightFitOptions wopt;
  wopt.mode = tops::parse_weight_fit_mode(args.weight_fit);
  wopt.jobs = args.jobs;

  tops::ModelMetadata meta;
  meta.seed = args.seed;

  log_info("growing tree");
  auto trained = tops::train_tops(data, partition, algorithms, loss_spec,
                                  growth, wopt, meta);
  trained.model.label_name = schema.label;

  std::optional<tops::BoundReport> bound_report;
  if (args.bounds) {
    log_info("estimating loss bounds");
    bound_report = tops::evaluate_bounds(
        trained.model, trained.normalized, trained.partition.s,
        args.bounds_delta, args.bounds_draws,
        tops::derive_seed(args.seed, {tops::fnv1a64("bounds")}));
  }

  tops::save_model(trained.model, args.out);
  const auto report_json = tops::training_report_to_json(
      trained, bound_report ? &*bound_report : nullptr);
  if (!args.report.empty())
    write_text_file(args.report, report_json.dump(1) + "\n");

  std::printf("model: %s\n", args.out.c_str());
  std::printf("nodes: %zu  terminals: %zu  depth: %d\n",
              trained.model.tree.nodes.size(),
              trained.model.tree.terminal_ids().size(),
              trained.model.tree.depth());
  std::printf("V1 loss (%s): root %.6f -> final %.6f\n",
              tops::loss_name(loss_spec.kind).c_str(),
              trained.growth.root_v1_loss, trained.growth.final_v1_loss);
  if (bound_report && bound_report->aggregate_valid)
    std::printf("aggregate bound (%s, %s): %.6f\n",
                bound_report->loss_basis.c_str(), bound_report->note.c_str(),
                bound_report->aggregate_bound);
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const auto model = tops::load_model(model_path);
  const auto rows = load_feature_rows(data_path, model.features);

  std::ostringstream os;
  const bool classify_too = model.label_kind == tops::LabelKind::binary;
  os << (classify_too ? "score,class\n" : "score\n");
  char buf[64];
  for (const auto& x : rows) {
    const double score = tops::predict(model, x);
    std::snprintf(buf, sizeof(buf), "%.17g", score);
    os << buf;
    if (classify_too) os << ',' << (score >= 0.5 ? 1 : 0);
    os << '\n';
  }
  write_text_file(out_path, os.str());
  std::printf("wrote %zu predictions to %s\n", rows.size(), out_path.c_str());
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& label_override,
                 const std::string& out_path) {
  const auto model = tops::load_model(model_path);
  tops::DataSchema schema;
  schema.label = label_override.empty() ? model.label_name : label_override;
  for (const auto& f : model.features) {
    if (f.kind == tops::FeatureKind::binary) schema.binary.push_back(f.name);
  }
  schema.label_kind = model.label_kind;
  const auto data = tops::load_csv(data_path, schema);
  if (data.cols() != static_cast<int>(model.features.size()))
    throw tops::DataError("data has " + std::to_string(data.cols()) +
                          " features, model expects " +
                          std::to_string(model.features.size()));

  tops::ScoredSet scored;
  for (int r = 0; r < data.rows(); ++r)
    scored.append(tops::predict(model, data.row(r)), data.label(r));
  bool fell_back = false;
  const double value =
      tops::detail::loss_with_fallback(model.loss, scored, &fell_back);

  std::printf("%s on %d rows: %.6f%s\n",
              tops::loss_name(model.loss.kind).c_str(), data.rows(), value,
              fell_back ? " (error-rate fallback: single-class labels)" : "");
  if (!out_path.empty()) {
    nlohmann::json j;
    j["loss"] = tops::loss_name(model.loss.kind);
    j["value"] = value;
    j["rows"] = data.rows();
    j["fallback"] = fell_back;
    write_text_file(out_path, j.dump(1) + "\n");
  }
  return 0;
}

int run_inspect(const std::string& model_path, const std::string& dot_path,
                int highlight) {
  const auto model = tops::load_model(model_path);
  std::optional<int> terminal;
  if (highlight >= 0) terminal = highlight;
  const auto dot = tops::export_dot(model, terminal);
  if (!dot_path.empty()) write_text_file(dot_path, dot);

  std::printf("%-5s %-6s %-14s %-8s %-10s %-10s %s\n", "node", "depth",
              "learner", "train", "delta_v", "delta_t", "split");
  for (const auto& n : model.tree.nodes) {
    std::string marker;
    if (n.predictor->trained_on != n.id) {
      const int hops =
          n.depth - model.tree.node(n.predictor->trained_on).depth;
      for (int h = 0; h < hops; ++h) marker += "^";
    }
    std::string split = "-";
    if (n.split) {
      split = model.features[static_cast<std::size_t>(n.split->feature)].name +
              " >= " + tops::detail::format_double(n.split->threshold);
    }
    std::printf("%-5d %-6d %-14s %-8s %-10.6f %-10.6f %s\n", n.id, n.depth,
                n.predictor->algorithm.c_str(),
                (std::to_string(n.predictor->trained_on) + marker).c_str(),
                n.delta_v, n.delta_t, split.c_str());
  }
  if (!dot_path.empty()) std::printf("dot written to %s\n", dot_path.c_str());
  return 0;
}

int run_bench(const std::string& config_path, const std::string& out_path,
              int jobs) {
  auto config = tops::experiment_config_from_json(read_json_file(config_path));
  if (jobs > 0) config.jobs = jobs;
  log_info("running experiment from " + config_path);
  const auto report = tops::run_experiment(config);
  write_text_file(out_path,
                  tops::experiment_report_to_json(report).dump(1) + "\n");
  std::fputs(tops::experiment_report_table(report).c_str(), stdout);
  std::printf("report written to %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tops: tree-of-predictors ensemble learner"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "grow a tree and fit path weights");
  train->add_option("--data", train_args.data, "training CSV")->required();
  train->add_option("--schema", train_args.schema, "schema JSON file");
  train->add_option("--label", train_args.label, "label column name");
  train->add_option("--binary", train_args.binary,
                    "comma-separated binary column names");
  train->add_option("--learners", train_args.learners,
                    "tops_lr | tops_b | comma-separated kinds");
  train->add_option("--loss", train_args.loss, "error | auc | mae | mse");
  train->add_option("--seed", train_args.seed, "master seed");
  train->add_option("--out", train_args.out, "model output path")->required();
  train->add_option("--report", train_args.report, "training report JSON path");
  train->add_option("--ratios", train_args.ratios, "S,V1,V2 ratios");
  train->add_option("--weight-fit", train_args.weight_fit,
                    "squared_error | configured_loss_gridsearch");
  train->add_flag("--bounds", train_args.bounds, "add loss-bound estimates");
  train->add_option("--bounds-delta", train_args.bounds_delta,
                    "confidence parameter");
  train->add_option("--bounds-draws", train_args.bounds_draws,
                    "Monte-Carlo draws");
  train->add_option("--max-depth", train_args.max_depth, "tree depth limit");
  train->add_option("--min-leaf-v1", train_args.min_leaf_v1,
                    "minimum V1 rows per child");
  train->add_option("--min-train-samples", train_args.min_train_samples,
                    "minimum rows for any fit");
  train->add_option("--improvement-tol", train_args.improvement_tol,
                    "strict-improvement margin");
  train->add_option("--jobs", train_args.jobs, "worker threads");

  std::string predict_model, predict_data, predict_out;
  auto* predict = app.add_subcommand("predict", "score rows with a model");
  predict->add_option("--model", predict_model, "model file")->required();
  predict->add_option("--data", predict_data, "input CSV")->required();
  predict->add_option("--out", predict_out, "predictions CSV")->required();

  std::string eval_model, eval_data, eval_label, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "loss of a model on labeled data");
  evaluate->add_option("--model", eval_model, "model file")->required();
  evaluate->add_option("--data", eval_data, "labeled CSV")->required();
  evaluate->add_option("--label", eval_label, "label column override");
  evaluate->add_option("--out", eval_out, "evaluation JSON path");

  std::string inspect_model, inspect_dot;
  int inspect_path = -1;
  auto* inspect = app.add_subcommand("inspect", "tree summary and DOT export");
  inspect->add_option("--model", inspect_model, "model file")->required();
  inspect->add_option("--dot", inspect_dot, "DOT output path");
  inspect->add_option("--path", inspect_path,
                      "terminal id whose path to highlight");

  std::string bench_config, bench_out = "experiment_report.json";
  int bench_jobs = 0;
  auto* bench = app.add_subcommand("bench", "run an experiment config");
  bench->add_option("--config", bench_config, "experiment config JSON")
      ->required();
  bench->add_option("--out", bench_out, "report output path");
  bench->add_option("--jobs", bench_jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return run_train(train_args);
    if (*predict) return run_predict(predict_model, predict_data, predict_out);
    if (*evaluate)
      return run_evaluate(eval_model, eval_data, eval_label, eval_out);
    if (*inspect) return run_inspect(inspect_model, inspect_dot, inspect_path);
    if (*bench) return run_bench(bench_config, bench_out, bench_jobs);
  } catch (const tops::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const tops::TrainError& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return kExitTrain;
  } catch (const tops::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const tops::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
