/*
 * Copyright 2026 The mlshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Run configuration and the train / tune / explain / plot commands. The
// command-line front end (tools/mlshap.cpp) only parses flags into a
// RunConfig and dispatches here.

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlshap/data.hpp"
#include "mlshap/eval.hpp"
#include "mlshap/explainviz.hpp"
#include "mlshap/multilabel.hpp"
#include "mlshap/shap.hpp"

namespace mlshap::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Raised for invalid flag/config combinations.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kBackgroundStream = 0xB6;

struct RunConfig {
  std::optional<std::string> data;
  std::optional<std::string> format;  // arff | csv, default from extension
  std::optional<std::string> labels;  // "14", "first:14" or "a,b,c"
  std::optional<std::string> algo;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::string estimator = "kernel";
  std::optional<std::string> budget;  // default 2M + 2048
  std::size_t background = 100;
  std::string out = ".";

  // Hyperparameter overrides.
  std::optional<std::size_t> n_trees;
  std::optional<std::size_t> max_depth;
  std::optional<std::size_t> min_samples_leaf;
  std::optional<std::size_t> max_features;
  std::optional<std::size_t> k;
  std::optional<double> s;

  // tune
  std::optional<std::string> grid;  // "k=1..20" or "max_depth=3,15;min_samples_leaf=1,2"
  std::size_t reps = 2;
  std::size_t folds = 5;
  std::string scoring = "hamming_loss";

  // explain
  std::optional<std::string> model;
  std::string instances = "0";        // "550", "0,3,9", "0:100" or "all"
  std::string explain_labels = "all";  // "1,2,12,13" or "all"

  // plot
  std::optional<std::string> kind;
  std::vector<std::string> inputs;
  std::optional<std::size_t> plot_label;
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "data", "format", "labels", "algo", "preset", "seed", "estimator", "budget",
      "background", "out", "n_trees", "max_depth", "min_samples_leaf", "max_features",
      "k", "s", "grid", "reps", "folds", "scoring", "model", "instances",
      "explain_labels", "kind", "inputs", "plot_label"};
  return keys;
}

// Applies a JSON config document; unknown keys are rejected.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config: top level must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!config_keys().count(key)) throw UsageError("config: unknown key '" + key + "'");
  }
  try {
    auto str = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    auto num = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_cvref_t<decltype(field)>>();
    };
    auto opt_num = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<typename std::remove_cvref_t<decltype(field)>::value_type>();
    };
    str("data", c.data);
    str("format", c.format);
    if (j.contains("labels")) {
      const auto& v = j.at("labels");
      c.labels = v.is_number_unsigned() ? std::to_string(v.get<std::size_t>())
                                        : v.get<std::string>();
    }
    str("algo", c.algo);
    str("preset", c.preset);
    opt_num("seed", c.seed);
    str("estimator", c.estimator);
    if (j.contains("budget")) {
      const auto& v = j.at("budget");
      c.budget = v.is_number_unsigned() ? std::to_string(v.get<std::size_t>())
                                        : v.get<std::string>();
    }
    num("background", c.background);
    str("out", c.out);
    opt_num("n_trees", c.n_trees);
    opt_num("max_depth", c.max_depth);
    opt_num("min_samples_leaf", c.min_samples_leaf);
    opt_num("max_features", c.max_features);
    opt_num("k", c.k);
    opt_num("s", c.s);
    str("grid", c.grid);
    num("reps", c.reps);
    num("folds", c.folds);
    str("scoring", c.scoring);
    str("model", c.model);
    if (j.contains("instances")) {
      const auto& v = j.at("instances");
      c.instances = v.is_number_unsigned() ? std::to_string(v.get<std::size_t>())
                                           : v.get<std::string>();
    }
    str("explain_labels", c.explain_labels);
    str("kind", c.kind);
    num("inputs", c.inputs);
    opt_num("plot_label", c.plot_label);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  RunConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path.string() + "': " + e.what());
  }
  apply_config_json(c, j);
  return c;
}

inline std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) throw UsageError("--seed is required");
  return *c.seed;
}

inline Dataset load_data(const RunConfig& c) {
  if (!c.data) throw UsageError("--data is required");
  if (!c.labels) throw UsageError("--labels is required");
  const std::filesystem::path path(*c.data);
  if (!std::filesystem::exists(path)) {
    throw ParseError("data file '" + path.string() + "' does not exist");
  }
  std::string format = c.format.value_or(detail::to_lower(path.extension().string()));
  if (!format.empty() && format.front() == '.') format.erase(0, 1);
  const auto spec = LabelSpec::parse(*c.labels);
  if (format == "arff") return load_arff(path, spec);
  if (format == "csv") return load_csv(path, spec);
  throw UsageError("unknown data format '" + format + "' (expected arff or csv)");
}

inline ModelConfig model_config(const RunConfig& c) {
  const std::uint64_t seed = require_seed(c);
  ModelConfig m;
  if (c.preset) {
    m = preset(*c.preset, seed);
    if (c.algo && parse_algorithm(*c.algo) != m.algorithm) {
      throw UsageError("--algo " + *c.algo + " conflicts with --preset " + *c.preset);
    }
  } else {
    if (!c.algo) throw UsageError("one of --algo or --preset is required");
    m.algorithm = parse_algorithm(*c.algo);
    m.forest.seed = seed;
  }
  if (c.n_trees) m.forest.n_trees = *c.n_trees;
  if (c.max_depth) m.forest.max_depth = *c.max_depth;
  if (c.min_samples_leaf) m.forest.min_samples_leaf = *c.min_samples_leaf;
  if (c.max_features) m.forest.max_features = *c.max_features;
  if (c.k) m.k = *c.k;
  if (c.s) m.s = *c.s;
  m.forest.validate();
  return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// Inclusive integer ranges "a..b" or comma lists.
inline std::vector<double> parse_axis_values(const std::string& text) {
  std::vector<double> values;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_double(text.substr(0, dots));
    const auto hi = parse_double(text.substr(dots + 2));
    if (!lo || !hi || *lo > *hi || *lo != std::floor(*lo) || *hi != std::floor(*hi)) {
      throw UsageError("grid: malformed range '" + text + "'");
    }
    for (double v = *lo; v <= *hi; v += 1.0) values.push_back(v);
    return values;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_double(item);
    if (!v) throw UsageError("grid: malformed value '" + item + "'");
    values.push_back(*v);
  }
  if (values.empty()) throw UsageError("grid: empty axis");
  return values;
}

// "k=1..20" or "max_depth=3,15;min_samples_leaf=1,2".
inline std::vector<std::pair<std::string, std::vector<double>>> parse_grid(
    const std::string& text) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("grid: expected name=values, got '" + part + "'");
    }
    axes.emplace_back(part.substr(0, eq), parse_axis_values(part.substr(eq + 1)));
  }
  if (axes.empty()) throw UsageError("grid: no axes");
  return axes;
}

inline std::vector<std::size_t> parse_index_list(const std::string& text, std::size_t n,
                                                 const char* what) {
  std::vector<std::size_t> out;
  if (text == "all") {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  auto index = [&](const std::string& s) {
    const auto v = parse_double(s);
    if (!v || *v < 0 || *v != std::floor(*v)) {
      throw UsageError(std::string(what) + ": malformed index '" + s + "'");
    }
    const auto i = static_cast<std::size_t>(*v);
    if (i >= n) {
      throw UsageError(std::string(what) + ": index " + s + " out of range (" +
                       std::to_string(n) + " available)");
    }
    return i;
  };
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::size_t lo = index(text.substr(0, colon));
    const auto hi = parse_double(text.substr(colon + 1));
    if (!hi || *hi < static_cast<double>(lo) || *hi > static_cast<double>(n)) {
      throw UsageError(std::string(what) + ": malformed range '" + text + "'");
    }
    for (std::size_t i = lo; i < static_cast<std::size_t>(*hi); ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(index(item));
  if (out.empty()) throw UsageError(std::string(what) + ": empty selection");
  return out;
}

// train ----------------------------------------------------------------------

struct TrainResult {
  std::filesystem::path model_path;
  std::filesystem::path report_path;
  MultiLabelModel model;
};

inline TrainResult cmd_train(const RunConfig& c, std::ostream& log) {
  const auto config = model_config(c);
  const auto data = load_data(c);
  auto model = train_model(config, data);
  const auto pred = predict_label_matrix(model, data.features);

  const std::filesystem::path dir(c.out);
  TrainResult r{dir / "model.json", dir / "train_report.json", std::move(model)};
  write_text(r.model_path, dump(to_json(r.model)));

  nlohmann::json report;
  report["dataset"] = {{"name", data.name},
                       {"instances", data.n_instances()},
                       {"features", data.n_features()},
                       {"labels", data.n_labels()}};
  report["algorithm"] = algorithm_name(config.algorithm);
  report["preset"] = c.preset.value_or("");
  report["seed"] = *c.seed;
  if (config.algorithm == Algorithm::kMlknn) {
    report["hyperparameters"] = {{"k", config.k}, {"s", config.s}};
  } else {
    report["hyperparameters"] = params_to_json(config.forest);
  }
  if (const auto* cc = std::get_if<CCModel>(&r.model.variant())) {
    report["chain_order"] = cc->chain_order;
  }
  std::size_t n_models = 0;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BRModel>) n_models = m.per_label_models.size();
        else if constexpr (std::is_same_v<T, CCModel>) n_models = m.chained_models.size();
        else n_models = 1;
      },
      r.model.variant());
  report["persisted_models"] = n_models;
  report["training_metrics"] = {{"hamming_loss", hamming_loss(data.labels, pred)},
                                {"subset_accuracy", subset_accuracy(data.labels, pred)},
                                {"micro_f1", micro_f1(data.labels, pred)}};
  write_text(r.report_path, dump(report));
  log << "trained " << algorithm_name(config.algorithm) << " on " << data.name << " ("
      << data.n_instances() << " x " << data.n_features() << ", " << data.n_labels()
      << " labels) -> " << r.model_path.string() << "\n";
  return r;
}

// tune -----------------------------------------------------------------------

struct TuneResult {
  std::filesystem::path report_path;
  CVReport report;
  std::size_t cycles = 0;
};

inline TuneResult cmd_tune(const RunConfig& c, std::ostream& log) {
  if (!c.grid) throw UsageError("--grid is required for tune");
  const auto base = model_config(c);
  const auto metric = parse_metric(c.scoring);
  const auto grid = ParamGrid::cartesian(base, parse_grid(*c.grid));
  for (std::size_t i = 0; i < grid.points.size(); ++i) grid.config_at(i);  // validate names
  const auto data = load_data(c);
  const auto plan = make_folds(data.n_instances(), c.reps, c.folds, *c.seed);

  TuneResult r;
  r.report = grid_search(data, grid, plan, metric,
                         [&](std::size_t, std::size_t) { ++r.cycles; });
  r.report.total_evaluations = r.cycles;
  r.report_path = std::filesystem::path(c.out) / "cv_report.json";
  write_text(r.report_path, dump(to_json(r.report)));

  // Table sorted by the selection metric.
  std::vector<std::size_t> order(r.report.results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const bool minimize = lower_is_better(metric);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double x = r.report.results[a].metrics.at(r.report.scoring).mean;
    const double y = r.report.results[b].metrics.at(r.report.scoring).mean;
    return minimize ? x < y : x > y;
  });
  log << "grid points: " << grid.points.size() << ", folds: " << plan.size()
      << ", cycles: " << r.cycles << "\n";
  log << std::left << std::setw(36) << "params" << std::setw(16) << r.report.scoring
      << "std\n";
  for (std::size_t i : order) {
    std::string params;
    for (const auto& [name, value] : r.report.results[i].point) {
      if (!params.empty()) params += ' ';
      params += name + "=" + format_double(value);
    }
    if (i == r.report.best_index) params += " *";
    const auto& s = r.report.results[i].metrics.at(r.report.scoring);
    log << std::left << std::setw(36) << params << std::setw(16) << std::fixed
        << std::setprecision(6) << s.mean << s.stddev << "\n";
  }
  log.unsetf(std::ios::fixed);
  return r;
}

// explain --------------------------------------------------------------------

struct ExplainResult {
  std::vector<std::filesystem::path> files;
  std::vector<Explanation> explanations;
};

inline MultiLabelModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ParseError("model file '" + path.string() + "' does not exist");
  }
  try {
    return model_from_json(nlohmann::json::parse(detail::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model '" + path.string() + "': " + e.what());
  }
}

inline ExplainResult cmd_explain(const RunConfig& c, std::ostream& log) {
  const std::uint64_t seed = require_seed(c);
  if (!c.model) throw UsageError("--model is required for explain");
  const auto estimator = parse_estimator(c.estimator);
  const auto model = load_model(*c.model);
  if (estimator == Estimator::kExact && model.n_features() > kExactFeatureCap) {
    throw UsageError("exact estimator is limited to " + std::to_string(kExactFeatureCap) +
                     " features; this model has " + std::to_string(model.n_features()) +
                     " (use --estimator kernel)");
  }
  const auto data = load_data(c);
  if (data.feature_names != model.feature_names()) {
    throw UsageError("data features do not match the model's features");
  }
  const auto instances = parse_index_list(c.instances, data.n_instances(), "instances");
  const auto labels = parse_index_list(c.explain_labels, model.n_labels(), "explain_labels");
  const auto background =
      sample_background(data.features, c.background, derive_seed(seed, kBackgroundStream));
  ExplainOptions options;
  options.estimator = estimator;
  if (c.budget) options.budget = Budget::parse(*c.budget);
  options.seed = seed;

  ExplainResult r;
  const std::filesystem::path dir(c.out);
  for (std::size_t i : instances) {
    auto es = explain_instance(model, data.features.row(i), background, labels, options, i);
    for (auto& e : es) {
      const auto path = dir / ("explanation_i" + std::to_string(i) + "_l" +
                               std::to_string(e.label) + ".json");
      write_text(path, dump(to_json(e)));
      r.files.push_back(path);
      r.explanations.push_back(std::move(e));
    }
  }
  log << "wrote " << r.files.size() << " explanation(s) to " << dir.string() << "\n";
  return r;
}

// plot -----------------------------------------------------------------------

struct PlotResult {
  std::filesystem::path svg_path;
  std::filesystem::path json_path;
  PlotSpec spec;
};

inline std::vector<Explanation> read_explanations(const std::vector<std::string>& files) {
  std::vector<Explanation> out;
  for (const auto& f : files) {
    if (!std::filesystem::exists(f)) throw ParseError("explanation file '" + f + "' does not exist");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(f));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("explanation '" + f + "': " + e.what());
    }
    if (j.is_array()) {
      for (const auto& item : j) out.push_back(explanation_from_json(item));
    } else {
      out.push_back(explanation_from_json(j));
    }
  }
  return out;
}

inline PlotResult cmd_plot(const RunConfig& c, std::ostream& log) {
  if (!c.kind) throw UsageError("--kind is required for plot");
  PlotKind kind;
  try {
    kind = parse_plot_kind(*c.kind);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  if (c.inputs.empty()) throw UsageError("plot needs at least one explanation file");
  auto explanations = read_explanations(c.inputs);

  PlotSpec spec;
  switch (kind) {
    case PlotKind::kImportance: {
      auto table = feature_importance(explanations);
      if (c.model) {
        const auto model = load_model(*c.model);
        for (std::size_t l : table.labels) {
          table.label_names.push_back(l < model.n_labels() ? model.label_names()[l] : "");
        }
      }
      spec.title = "Feature importance (" + std::to_string(explanations.size()) +
                   " explanations)";
      spec.payload = std::move(table);
      break;
    }
    case PlotKind::kSummary: {
      std::set<std::size_t> labels;
      for (const auto& e : explanations) labels.insert(e.label);
      std::size_t label = *labels.begin();
      if (c.plot_label) {
        label = *c.plot_label;
      } else if (labels.size() > 1) {
        throw UsageError("explanations cover several labels; choose one with --plot-label");
      }
      std::vector<Explanation> selected;
      for (auto& e : explanations) {
        if (e.label == label) selected.push_back(std::move(e));
      }
      if (selected.empty()) {
        throw UsageError("no explanation for label " + std::to_string(label));
      }
      spec.title = "Summary, label " + std::to_string(label);
      spec.payload = summary_points(selected);
      break;
    }
    case PlotKind::kForce: {
      if (explanations.size() != 1) {
        throw UsageError("force plot takes exactly one explanation");
      }
      const auto& e = explanations.front();
      spec.title = "Instance " + std::to_string(e.instance) + ", label " +
                   std::to_string(e.label);
      spec.payload = force_data(e);
      break;
    }
  }
  const std::filesystem::path dir(c.out);
  PlotResult r{dir / (plot_kind_name(kind) + ".svg"), dir / (plot_kind_name(kind) + ".json"),
               std::move(spec)};
  write_text(r.svg_path, render_svg(r.spec));
  write_text(r.json_path, write_json(r.spec));
  log << "wrote " << r.svg_path.string() << " and " << r.json_path.string() << "\n";
  return r;
}

}  // namespace mlshap::cli
