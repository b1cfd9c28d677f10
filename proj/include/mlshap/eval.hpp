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

// Multi-label metrics, model configurations/presets and the repeated k-fold
// grid search.

#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlshap/data.hpp"
#include "mlshap/multilabel.hpp"

namespace mlshap {

namespace detail {
inline void check_same_shape(const LabelMatrix& a, const LabelMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("metric: label matrices differ in shape");
  }
  if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("metric: empty label matrix");
}
}  // namespace detail

// Fraction of label entries that differ.
inline double hamming_loss(const LabelMatrix& truth, const LabelMatrix& pred) {
  detail::check_same_shape(truth, pred);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.data().size(); ++i) {
    wrong += truth.data()[i] != pred.data()[i];
  }
  return static_cast<double>(wrong) / static_cast<double>(truth.data().size());
}

// Fraction of rows predicted exactly.
inline double subset_accuracy(const LabelMatrix& truth, const LabelMatrix& pred) {
  detail::check_same_shape(truth, pred);
  std::size_t exact = 0;
  for (std::size_t r = 0; r < truth.rows(); ++r) {
    auto a = truth.row(r);
    auto b = pred.row(r);
    exact += std::equal(a.begin(), a.end(), b.begin());
  }
  return static_cast<double>(exact) / static_cast<double>(truth.rows());
}

// 2TP / (2TP + FP + FN) over all entries. Defined as 1 when neither matrix
// has a positive entry.
inline double micro_f1(const LabelMatrix& truth, const LabelMatrix& pred) {
  detail::check_same_shape(truth, pred);
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.data().size(); ++i) {
    const bool t = truth.data()[i];
    const bool p = pred.data()[i];
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2 * tp / (2 * tp + fp + fn);
}

enum class Metric { kHammingLoss, kSubsetAccuracy, kMicroF1 };

inline const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> metrics = {Metric::kHammingLoss,
                                              Metric::kSubsetAccuracy,
                                              Metric::kMicroF1};
  return metrics;
}

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kHammingLoss: return "hamming_loss";
    case Metric::kSubsetAccuracy: return "subset_accuracy";
    case Metric::kMicroF1: return "micro_f1";
  }
  return "unknown";
}

inline Metric parse_metric(std::string_view name) {
  for (Metric m : all_metrics()) {
    if (metric_name(m) == name) return m;
  }
  throw InvalidArgument("unknown metric '" + std::string(name) +
                        "' (expected hamming_loss, subset_accuracy or micro_f1)");
}

inline bool lower_is_better(Metric m) { return m == Metric::kHammingLoss; }

inline double score(Metric m, const LabelMatrix& truth, const LabelMatrix& pred) {
  switch (m) {
    case Metric::kHammingLoss: return hamming_loss(truth, pred);
    case Metric::kSubsetAccuracy: return subset_accuracy(truth, pred);
    case Metric::kMicroF1: return micro_f1(truth, pred);
  }
  return 0.0;
}

// Everything needed to fit one multi-label model.
struct ModelConfig {
  Algorithm algorithm = Algorithm::kBinaryRelevance;
  ForestParams forest;
  std::optional<std::vector<std::size_t>> chain_order;  // CC; empty => random
  std::size_t k = 5;                                      // MLKNN
  double s = 1.0;                                         // MLKNN

  // Overrides one named hyperparameter.
  void set(const std::string& name, double value) {
    auto count = [&] {
      if (value < 0 || value != std::floor(value)) {
        throw InvalidArgument("hyperparameter '" + name + "' must be a non-negative integer");
      }
      return static_cast<std::size_t>(value);
    };
    if (name == "k") k = count();
    else if (name == "s") s = value;
    else if (name == "n_trees") forest.n_trees = count();
    else if (name == "max_depth") forest.max_depth = count();
    else if (name == "min_samples_leaf") forest.min_samples_leaf = count();
    else if (name == "max_features") forest.max_features = count();
    else throw InvalidArgument("unknown hyperparameter '" + name + "'");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline MultiLabelModel train_model(const ModelConfig& config, const Dataset& train) {
  switch (config.algorithm) {
    case Algorithm::kBinaryRelevance: return fit_br(train, config.forest);
    case Algorithm::kClassifierChain:
      return fit_cc(train, config.forest, config.chain_order);
    case Algorithm::kMlknn: return fit_mlknn(train, config.k, config.s);
  }
  throw InvalidArgument("unknown algorithm");
}

// Winning configurations of the reference experiments: BR forest {entropy,
// max_depth 15, min_samples_leaf 2}, CC forest {entropy, max_depth 3, random
// order}, MLKNN k = 5. Unstated forest settings keep the library defaults.
inline ModelConfig preset(std::string_view name, std::uint64_t seed) {
  ModelConfig c;
  c.forest.seed = seed;
  if (name == "paper-br") {
    c.algorithm = Algorithm::kBinaryRelevance;
    c.forest.max_depth = 15;
    c.forest.min_samples_leaf = 2;
  } else if (name == "paper-cc") {
    c.algorithm = Algorithm::kClassifierChain;
    c.forest.max_depth = 3;
  } else if (name == "paper-mlknn") {
    c.algorithm = Algorithm::kMlknn;
    c.k = 5;
    c.s = 1.0;
  } else {
    throw InvalidArgument("unknown preset '" + std::string(name) +
                          "' (expected paper-br, paper-cc or paper-mlknn)");
  }
  return c;
}

using GridPoint = std::vector<std::pair<std::string, double>>;

struct ParamGrid {
  ModelConfig base;
  std::vector<GridPoint> points;

  // Cartesian product of the axes; the last axis varies fastest.
  static ParamGrid cartesian(
      ModelConfig base,
      const std::vector<std::pair<std::string, std::vector<double>>>& axes) {
    ParamGrid grid{std::move(base), {GridPoint{}}};
    for (const auto& [name, values] : axes) {
      if (values.empty()) throw InvalidArgument("grid axis '" + name + "' is empty");
      std::vector<GridPoint> next;
      for (const auto& p : grid.points) {
        for (double v : values) {
          GridPoint q = p;
          q.emplace_back(name, v);
          next.push_back(std::move(q));
        }
      }
      grid.points = std::move(next);
    }
    return grid;
  }

  ModelConfig config_at(std::size_t i) const {
    ModelConfig c = base;
    for (const auto& [name, value] : points.at(i)) c.set(name, value);
    return c;
  }
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::vector<double> values;
};

struct GridPointResult {
  GridPoint point;
  std::map<std::string, MetricSummary> metrics;
};

struct CVReport {
  std::string algorithm;
  std::string scoring;
  std::size_t repetitions = 0;
  std::size_t folds = 0;
  std::uint64_t fold_seed = 0;
  std::vector<GridPointResult> results;
  std::size_t best_index = 0;
  std::size_t total_evaluations = 0;

  std::size_t evaluations_per_point() const { return repetitions * folds; }
};

inline MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.values = std::move(values);
  return s;
}

// Fits and scores every grid point on every (train, test) pair of the plan.
// `on_cycle` is invoked once per completed fit/evaluate cycle.
inline CVReport grid_search(const Dataset& dataset, const ParamGrid& grid,
                            const FoldPlan& plan, Metric scoring,
                            const std::function<void(std::size_t, std::size_t)>& on_cycle = {}) {
  if (grid.points.empty()) throw InvalidArgument("grid_search: empty grid");
  if (plan.n_instances != dataset.n_instances()) {
    throw InvalidArgument("grid_search: fold plan was built for " +
                          std::to_string(plan.n_instances) + " instances, dataset has " +
                          std::to_string(dataset.n_instances()));
  }
  std::vector<const FoldSplit*> splits;
  for (const auto& rep : plan.assignments) {
    for (const auto& f : rep) splits.push_back(&f);
  }
  const std::size_t n_points = grid.points.size();
  const std::size_t n_metrics = all_metrics().size();
  // scores[(point * splits + split) * metrics + metric]
  std::vector<double> scores(n_points * splits.size() * n_metrics);
  std::vector<ModelConfig> configs;
  for (std::size_t p = 0; p < n_points; ++p) configs.push_back(grid.config_at(p));

  for (std::size_t p = 0; p < n_points; ++p) {
    for (std::size_t s = 0; s < splits.size(); ++s) {
      const auto train = split(dataset, splits[s]->train);
      const auto test = split(dataset, splits[s]->test);
      const auto model = train_model(configs[p], train);
      const auto pred = predict_label_matrix(model, test.features);
      for (std::size_t m = 0; m < n_metrics; ++m) {
        scores[(p * splits.size() + s) * n_metrics + m] =
            score(all_metrics()[m], test.labels, pred);
      }
      if (on_cycle) on_cycle(p, s);
    }
  }

  CVReport report;
  report.algorithm = algorithm_name(grid.base.algorithm);
  report.scoring = metric_name(scoring);
  report.repetitions = plan.repetitions;
  report.folds = plan.folds_per_rep;
  report.fold_seed = plan.seed;
  report.total_evaluations = n_points * splits.size();
  for (std::size_t p = 0; p < n_points; ++p) {
    GridPointResult r;
    r.point = grid.points[p];
    for (std::size_t m = 0; m < n_metrics; ++m) {
      std::vector<double> values;
      for (std::size_t s = 0; s < splits.size(); ++s) {
        values.push_back(scores[(p * splits.size() + s) * n_metrics + m]);
      }
      r.metrics[metric_name(all_metrics()[m])] = summarize(std::move(values));
    }
    report.results.push_back(std::move(r));
  }
  const bool minimize = lower_is_better(scoring);
  for (std::size_t p = 1; p < n_points; ++p) {
    const double cand = report.results[p].metrics.at(report.scoring).mean;
    const double best = report.results[report.best_index].metrics.at(report.scoring).mean;
    if (minimize ? cand < best : cand > best) report.best_index = p;
  }
  return report;
}

inline nlohmann::json to_json(const CVReport& r) {
  nlohmann::json j;
  j["format"] = "mlshap.cvreport";
  j["version"] = 1;
  j["algorithm"] = r.algorithm;
  j["scoring"] = r.scoring;
  j["repetitions"] = r.repetitions;
  j["folds"] = r.folds;
  j["fold_seed"] = r.fold_seed;
  j["evaluations_per_point"] = r.evaluations_per_point();
  j["total_evaluations"] = r.total_evaluations;
  j["best_index"] = r.best_index;
  auto& points = j["points"] = nlohmann::json::array();
  for (const auto& res : r.results) {
    nlohmann::json jp;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, value] : res.point) params[name] = value;
    jp["params"] = std::move(params);
    for (const auto& [name, s] : res.metrics) {
      jp["metrics"][name] = {{"mean", s.mean}, {"std", s.stddev}, {"values", s.values}};
    }
    points.push_back(std::move(jp));
  }
  return j;
}

}  // namespace mlshap
