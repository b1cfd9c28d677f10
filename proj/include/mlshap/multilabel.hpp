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

// Multi-label learners: binary relevance, classifier chains and ML-kNN.
//
// All three expose per-label probabilities through MultiLabelModel. BR and CC
// use one RandomForest per label. The forest seed of a label is derived from
// the global seed and a hash of that label's training column, so a label's
// model does not depend on which other labels are present or how they are
// ordered.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlshap/common.hpp"
#include "mlshap/data.hpp"
#include "mlshap/forest.hpp"

namespace mlshap {

enum class Algorithm { kBinaryRelevance, kClassifierChain, kMlknn };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kBinaryRelevance: return "br";
    case Algorithm::kClassifierChain: return "cc";
    case Algorithm::kMlknn: return "mlknn";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "br") return Algorithm::kBinaryRelevance;
  if (name == "cc") return Algorithm::kClassifierChain;
  if (name == "mlknn") return Algorithm::kMlknn;
  throw ParseError("unknown algorithm '" + std::string(name) +
                   "' (expected br, cc or mlknn)");
}

inline constexpr std::uint64_t kChainOrderStream = 0xC4A1'0000'0000'0001ULL;

// Seed used for the forest of one label column.
inline std::uint64_t label_seed(std::uint64_t seed,
                                std::span<const std::uint8_t> column) {
  return derive_seed(seed, fnv1a(column));
}

struct BRModel {
  std::vector<RandomForest> per_label_models;
  friend bool operator==(const BRModel&, const BRModel&) = default;
};

struct CCModel {
  // chain_order[j] is the label predicted at chain position j.
  std::vector<std::size_t> chain_order;
  // chained_models[j] consumes features ++ outputs of positions 0..j-1.
  std::vector<RandomForest> chained_models;
  friend bool operator==(const CCModel&, const CCModel&) = default;
};

struct MLKNNModel {
  std::size_t k = 5;
  double s = 1.0;
  Matrix train_features;
  LabelMatrix train_labels;
  std::vector<double> priors;  // P(label present), per label
  // [label][j]: training instances with / without the label whose k
  // neighbours (self excluded) carry the label exactly j times.
  std::vector<std::vector<double>> counts_present;
  std::vector<std::vector<double>> counts_absent;
  friend bool operator==(const MLKNNModel&, const MLKNNModel&) = default;
};

// Indices of the k rows nearest to x in Euclidean distance, nearest first;
// ties go to the lower row index. `exclude` removes one row from
// consideration.
inline std::vector<std::size_t> knn_indices(const Matrix& train,
                                            std::span<const double> x,
                                            std::size_t k,
                                            std::optional<std::size_t> exclude = {}) {
  const std::size_t available = train.rows() - (exclude ? 1 : 0);
  if (k > available) {
    throw InvalidArgument("knn_indices: k=" + std::to_string(k) +
                          " exceeds the " + std::to_string(available) +
                          " available rows");
  }
  if (x.size() != train.cols()) {
    throw InvalidArgument("knn_indices: width mismatch");
  }
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(train.rows());
  for (std::size_t r = 0; r < train.rows(); ++r) {
    if (exclude && *exclude == r) continue;
    auto row = train.row(r);
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = row[j] - x[j];
      d += diff * diff;
    }
    dist.emplace_back(d, r);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

class MultiLabelModel {
 public:
  using Variant = std::variant<BRModel, CCModel, MLKNNModel>;

  MultiLabelModel() = default;
  MultiLabelModel(Variant model, std::vector<std::string> feature_names,
                  std::vector<std::string> label_names)
      : model_(std::move(model)),
        feature_names_(std::move(feature_names)),
        label_names_(std::move(label_names)) {}

  Algorithm algorithm() const {
    return static_cast<Algorithm>(model_.index());
  }
  std::size_t n_features() const { return feature_names_.size(); }
  std::size_t n_labels() const { return label_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  const Variant& variant() const { return model_; }

  // Probability per label, in the dataset's label order.
  std::vector<double> predict_proba(std::span<const double> x) const {
    check_width(x);
    return std::visit([&](const auto& m) { return predict_all(m, x); }, model_);
  }

  // Probability of one label; evaluates only what that label needs.
  double predict_label_proba(std::span<const double> x, std::size_t label) const {
    check_width(x);
    if (label >= n_labels()) {
      throw InvalidArgument("label index " + std::to_string(label) +
                            " out of range for " + std::to_string(n_labels()) +
                            " labels");
    }
    return std::visit([&](const auto& m) { return predict_one(m, x, label); },
                      model_);
  }

  friend bool operator==(const MultiLabelModel&, const MultiLabelModel&) = default;

 private:
  void check_width(std::span<const double> x) const {
    if (x.size() != n_features()) {
      throw InvalidArgument("expected " + std::to_string(n_features()) +
                            " features, got " + std::to_string(x.size()));
    }
  }

  static std::vector<double> predict_all(const BRModel& m, std::span<const double> x) {
    std::vector<double> out;
    out.reserve(m.per_label_models.size());
    for (const auto& f : m.per_label_models) out.push_back(f.predict_proba(x));
    return out;
  }
  static double predict_one(const BRModel& m, std::span<const double> x,
                            std::size_t label) {
    return m.per_label_models[label].predict_proba(x);
  }

  // Hard 0/1 decisions of earlier links feed later links.
  static std::vector<double> run_chain(const CCModel& m, std::span<const double> x,
                                       std::size_t stop_position) {
    std::vector<double> augmented(x.begin(), x.end());
    std::vector<double> by_position;
    for (std::size_t j = 0; j <= stop_position; ++j) {
      const double p = m.chained_models[j].predict_proba(augmented);
      by_position.push_back(p);
      augmented.push_back(p >= 0.5 ? 1.0 : 0.0);
    }
    return by_position;
  }
  static std::vector<double> predict_all(const CCModel& m, std::span<const double> x) {
    const auto by_position = run_chain(m, x, m.chain_order.size() - 1);
    std::vector<double> out(m.chain_order.size());
    for (std::size_t j = 0; j < by_position.size(); ++j) {
      out[m.chain_order[j]] = by_position[j];
    }
    return out;
  }
  static double predict_one(const CCModel& m, std::span<const double> x,
                            std::size_t label) {
    const auto pos = static_cast<std::size_t>(
        std::find(m.chain_order.begin(), m.chain_order.end(), label) -
        m.chain_order.begin());
    return run_chain(m, x, pos).back();
  }

  static double mlknn_posterior(const MLKNNModel& m, std::size_t label,
                                std::size_t hits) {
    const auto& c1 = m.counts_present[label];
    const auto& c0 = m.counts_absent[label];
    const double k1 = static_cast<double>(m.k + 1);
    const double sum1 = std::accumulate(c1.begin(), c1.end(), 0.0);
    const double sum0 = std::accumulate(c0.begin(), c0.end(), 0.0);
    const double like1 = (m.s + c1[hits]) / (m.s * k1 + sum1);
    const double like0 = (m.s + c0[hits]) / (m.s * k1 + sum0);
    const double a = m.priors[label] * like1;
    const double b = (1.0 - m.priors[label]) * like0;
    return a / (a + b);
  }
  static std::vector<double> predict_all(const MLKNNModel& m,
                                         std::span<const double> x) {
    const auto nn = knn_indices(m.train_features, x, m.k);
    std::vector<double> out(m.priors.size());
    for (std::size_t l = 0; l < out.size(); ++l) {
      std::size_t hits = 0;
      for (std::size_t i : nn) hits += m.train_labels(i, l);
      out[l] = mlknn_posterior(m, l, hits);
    }
    return out;
  }
  static double predict_one(const MLKNNModel& m, std::span<const double> x,
                            std::size_t label) {
    std::size_t hits = 0;
    for (std::size_t i : knn_indices(m.train_features, x, m.k)) {
      hits += m.train_labels(i, label);
    }
    return mlknn_posterior(m, label, hits);
  }

  Variant model_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> label_names_;
};

// One independent forest per label column.
inline MultiLabelModel fit_br(const Dataset& train, const ForestParams& params) {
  if (train.n_labels() < 1) throw InvalidArgument("fit_br: dataset has no labels");
  BRModel m;
  m.per_label_models.resize(train.n_labels());
  parallel_for(train.n_labels(), [&](std::size_t l) {
    const auto y = train.label_column(l);
    ForestParams p = params;
    p.seed = label_seed(params.seed, y);
    m.per_label_models[l] = fit_forest(train.features, y, p);
  });
  return MultiLabelModel(std::move(m), train.feature_names, train.label_names);
}

inline std::vector<std::size_t> random_chain_order(std::size_t n_labels,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> order(n_labels);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kChainOrderStream));
  rng.shuffle(order);
  return order;
}

// Link j trains on the features augmented with the true values of the labels
// at chain positions 0..j-1. An empty `order` selects a seeded random order.
inline MultiLabelModel fit_cc(const Dataset& train, const ForestParams& params,
                              std::optional<std::vector<std::size_t>> order = {}) {
  const std::size_t n_labels = train.n_labels();
  if (n_labels < 1) throw InvalidArgument("fit_cc: dataset has no labels");
  CCModel m;
  if (order) {
    std::vector<std::size_t> sorted = *order;
    std::sort(sorted.begin(), sorted.end());
    bool ok = sorted.size() == n_labels;
    for (std::size_t i = 0; ok && i < sorted.size(); ++i) ok = sorted[i] == i;
    if (!ok) throw InvalidArgument("fit_cc: chain order is not a permutation of the labels");
    m.chain_order = *order;
  } else {
    m.chain_order = random_chain_order(n_labels, params.seed);
  }

  const std::size_t n = train.n_instances();
  const std::size_t d = train.n_features();
  m.chained_models.resize(n_labels);
  for (std::size_t j = 0; j < n_labels; ++j) {
    Matrix augmented(n, d + j);
    for (std::size_t r = 0; r < n; ++r) {
      auto src = train.features.row(r);
      auto dst = augmented.row(r);
      std::copy(src.begin(), src.end(), dst.begin());
      for (std::size_t p = 0; p < j; ++p) {
        dst[d + p] = train.labels(r, m.chain_order[p]);
      }
    }
    const auto y = train.label_column(m.chain_order[j]);
    ForestParams p = params;
    p.seed = label_seed(params.seed, y);
    m.chained_models[j] = fit_forest(augmented, y, p);
  }
  return MultiLabelModel(std::move(m), train.feature_names, train.label_names);
}

// Neighbour statistics are collected with each training instance excluded
// from its own neighbourhood.
inline MultiLabelModel fit_mlknn(const Dataset& train, std::size_t k, double s = 1.0) {
  const std::size_t n = train.n_instances();
  if (k < 1) throw InvalidArgument("fit_mlknn: k must be >= 1");
  if (k >= n) {
    throw InvalidArgument("fit_mlknn: k=" + std::to_string(k) +
                          " must be smaller than the " + std::to_string(n) +
                          " training instances");
  }
  if (!(s > 0)) throw InvalidArgument("fit_mlknn: smoothing s must be > 0");
  const std::size_t n_labels = train.n_labels();

  MLKNNModel m;
  m.k = k;
  m.s = s;
  m.train_features = train.features;
  m.train_labels = train.labels;
  m.priors.resize(n_labels);
  for (std::size_t l = 0; l < n_labels; ++l) {
    double pos = 0;
    for (std::size_t i = 0; i < n; ++i) pos += train.labels(i, l);
    m.priors[l] = (s + pos) / (2 * s + static_cast<double>(n));
  }

  std::vector<std::vector<std::size_t>> neighbours(n);
  parallel_for(n, [&](std::size_t i) {
    neighbours[i] = knn_indices(train.features, train.features.row(i), k, i);
  });
  m.counts_present.assign(n_labels, std::vector<double>(k + 1, 0.0));
  m.counts_absent.assign(n_labels, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n_labels; ++l) {
      std::size_t hits = 0;
      for (std::size_t j : neighbours[i]) hits += train.labels(j, l);
      auto& counts = train.labels(i, l) ? m.counts_present[l] : m.counts_absent[l];
      counts[hits] += 1.0;
    }
  }
  return MultiLabelModel(std::move(m), train.feature_names, train.label_names);
}

// Decision rule: probability >= threshold -> 1.
inline std::vector<std::uint8_t> predict_labels(std::span<const double> probas,
                                                double threshold = 0.5) {
  std::vector<std::uint8_t> out(probas.size());
  for (std::size_t i = 0; i < probas.size(); ++i) {
    out[i] = probas[i] >= threshold ? 1 : 0;
  }
  return out;
}

inline LabelMatrix predict_label_matrix(const MultiLabelModel& model,
                                        const Matrix& x, double threshold = 0.5) {
  LabelMatrix out(x.rows(), model.n_labels());
  parallel_for(x.rows(), [&](std::size_t r) {
    const auto labels = predict_labels(model.predict_proba(x.row(r)), threshold);
    std::copy(labels.begin(), labels.end(), out.row(r).begin());
  });
  return out;
}

// Serialization -------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const MultiLabelModel& model) {
  nlohmann::json j;
  j["format"] = "mlshap.model";
  j["version"] = kModelFormatVersion;
  j["algorithm"] = algorithm_name(model.algorithm());
  j["feature_names"] = model.feature_names();
  j["label_names"] = model.label_names();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BRModel>) {
          auto& forests = j["forests"] = nlohmann::json::array();
          for (const auto& f : m.per_label_models) forests.push_back(to_json(f));
        } else if constexpr (std::is_same_v<T, CCModel>) {
          j["chain_order"] = m.chain_order;
          auto& forests = j["forests"] = nlohmann::json::array();
          for (const auto& f : m.chained_models) forests.push_back(to_json(f));
        } else {
          j["k"] = m.k;
          j["s"] = m.s;
          j["priors"] = m.priors;
          j["counts_present"] = m.counts_present;
          j["counts_absent"] = m.counts_absent;
          j["train_features"] = m.train_features.data();
          j["train_labels"] = m.train_labels.data();
          j["n_train"] = m.train_features.rows();
        }
      },
      model.variant());
  return j;
}

inline MultiLabelModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "mlshap.model") throw ParseError("not a model document");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw ParseError("unsupported model format version");
    }
    auto feature_names = j.at("feature_names").get<std::vector<std::string>>();
    auto label_names = j.at("label_names").get<std::vector<std::string>>();
    const std::size_t d = feature_names.size();
    const std::size_t n_labels = label_names.size();
    const auto algo = parse_algorithm(j.at("algorithm").get<std::string>());
    MultiLabelModel::Variant variant;
    if (algo == Algorithm::kMlknn) {
      MLKNNModel m;
      m.k = j.at("k").get<std::size_t>();
      m.s = j.at("s").get<double>();
      m.priors = j.at("priors").get<std::vector<double>>();
      m.counts_present = j.at("counts_present").get<std::vector<std::vector<double>>>();
      m.counts_absent = j.at("counts_absent").get<std::vector<std::vector<double>>>();
      const auto n_train = j.at("n_train").get<std::size_t>();
      m.train_features = Matrix(n_train, d, j.at("train_features").get<std::vector<double>>());
      m.train_labels = LabelMatrix(n_train, n_labels,
                                   j.at("train_labels").get<std::vector<std::uint8_t>>());
      if (m.priors.size() != n_labels || m.counts_present.size() != n_labels ||
          m.counts_absent.size() != n_labels || m.k < 1 || m.k >= n_train) {
        throw ParseError("mlknn model: inconsistent sizes");
      }
      for (std::size_t l = 0; l < n_labels; ++l) {
        if (m.counts_present[l].size() != m.k + 1 || m.counts_absent[l].size() != m.k + 1) {
          throw ParseError("mlknn model: inconsistent count arrays");
        }
      }
      variant = std::move(m);
    } else {
      std::vector<RandomForest> forests;
      for (const auto& jf : j.at("forests")) forests.push_back(forest_from_json(jf));
      if (forests.size() != n_labels) throw ParseError("model: forest count != label count");
      if (algo == Algorithm::kBinaryRelevance) {
        for (const auto& f : forests) {
          if (f.n_features() != d) throw ParseError("br model: forest width mismatch");
        }
        variant = BRModel{std::move(forests)};
      } else {
        CCModel m;
        m.chain_order = j.at("chain_order").get<std::vector<std::size_t>>();
        auto sorted = m.chain_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
          if (sorted[i] != i) throw ParseError("cc model: chain order is not a permutation");
        }
        if (sorted.size() != n_labels) throw ParseError("cc model: chain length mismatch");
        for (std::size_t p = 0; p < forests.size(); ++p) {
          if (forests[p].n_features() != d + p) {
            throw ParseError("cc model: link width mismatch");
          }
        }
        m.chained_models = std::move(forests);
        variant = std::move(m);
      }
    }
    return MultiLabelModel(std::move(variant), std::move(feature_names),
                           std::move(label_names));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

}  // namespace mlshap
