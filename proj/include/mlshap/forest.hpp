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

// Binary probabilistic random forest built from entropy decision trees.

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlshap/common.hpp"

namespace mlshap {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 64;
  std::size_t min_samples_leaf = 1;
  // nullopt selects floor(sqrt(n_features)), at least 1.
  std::optional<std::size_t> max_features;
  std::uint64_t seed = 0;
  bool bootstrap = true;

  void validate() const {
    if (n_trees < 1) throw InvalidArgument("forest: n_trees must be >= 1");
    if (max_depth < 1) throw InvalidArgument("forest: max_depth must be >= 1");
    if (min_samples_leaf < 1) {
      throw InvalidArgument("forest: min_samples_leaf must be >= 1");
    }
    if (max_features && *max_features < 1) {
      throw InvalidArgument("forest: max_features must be >= 1");
    }
  }

  std::size_t features_per_split(std::size_t n_features) const {
    if (max_features) return std::min(*max_features, n_features);
    const auto root = static_cast<std::size_t>(
        std::sqrt(static_cast<double>(n_features)));
    return std::max<std::size_t>(1, std::min(root, n_features));
  }

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Binary entropy in bits of a (positive, negative) count pair.
inline double entropy(double positives, double negatives) {
  if (positives < 0 || negatives < 0) {
    throw InvalidArgument("entropy: negative class count");
  }
  const double total = positives + negatives;
  if (total <= 0) throw InvalidArgument("entropy: both class counts are zero");
  double h = 0.0;
  for (double c : {positives, negatives}) {
    if (c > 0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

struct TreeNode {
  // feature < 0 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double probability = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
      : nodes_(std::move(nodes)), n_features_(n_features) {}

  // Rows with x[feature] <= threshold go left.
  double predict_proba(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(
          x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].probability;
  }

  std::size_t depth() const { return depth_from(0); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t depth_from(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)),
                        depth_from(static_cast<std::size_t>(n.right)));
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = -1.0;
  bool valid = false;
};

namespace detail {

// Midpoint of two consecutive distinct values; falls back to the lower value
// when the midpoint rounds up to the upper one.
inline double midpoint_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

inline bool better_split(const SplitCandidate& a, const SplitCandidate& b) {
  if (!b.valid) return a.valid;
  if (a.gain != b.gain) return a.gain > b.gain;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

}  // namespace detail

// Scans every midpoint threshold of one feature over the given rows and
// returns the highest-gain split that leaves at least min_leaf rows per side.
inline SplitCandidate best_split_for_feature(const Matrix& x,
                                             std::span<const std::uint8_t> y,
                                             std::span<const std::size_t> rows,
                                             std::size_t feature,
                                             std::size_t min_leaf) {
  std::vector<std::pair<double, std::uint8_t>> values;
  values.reserve(rows.size());
  double positives = 0;
  for (std::size_t r : rows) {
    values.emplace_back(x(r, feature), y[r]);
    positives += y[r];
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(rows.size());
  const double parent = entropy(positives, n - positives);

  SplitCandidate best;
  best.feature = feature;
  double left_pos = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    left_pos += values[i].second;
    if (values[i].first == values[i + 1].first) continue;
    const std::size_t n_left = i + 1;
    const std::size_t n_right = values.size() - n_left;
    if (n_left < min_leaf || n_right < min_leaf) continue;
    const double nl = static_cast<double>(n_left);
    const double nr = static_cast<double>(n_right);
    const double right_pos = positives - left_pos;
    const double gain = parent - (nl / n) * entropy(left_pos, nl - left_pos) -
                        (nr / n) * entropy(right_pos, nr - right_pos);
    SplitCandidate c{feature, detail::midpoint_threshold(values[i].first, values[i + 1].first),
                     gain, true};
    if (detail::better_split(c, best)) best = c;
  }
  return best;
}

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const std::uint8_t> y,
              const ForestParams& params, Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng),
        per_split_(params.features_per_split(x.cols())) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return DecisionTree(std::move(nodes_), x_.cols());
  }

 private:
  int make_leaf(std::span<const std::size_t> rows) {
    double pos = 0;
    for (std::size_t r : rows) pos += y_[r];
    TreeNode leaf;
    leaf.probability = pos / static_cast<double>(rows.size());
    nodes_.push_back(leaf);
    return static_cast<int>(nodes_.size() - 1);
  }

  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += y_[r];
    const bool pure = pos == 0 || pos == rows.size();
    if (pure || depth >= params_.max_depth ||
        rows.size() < 2 * params_.min_samples_leaf) {
      return make_leaf(rows);
    }

    // Visit features in random order until per_split_ non-constant features
    // have been scored.
    std::vector<std::size_t> order(x_.cols());
    std::iota(order.begin(), order.end(), 0);
    SplitCandidate best;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < order.size() && scored < per_split_; ++i) {
      std::swap(order[i], order[i + rng_.below(order.size() - i)]);
      const std::size_t f = order[i];
      bool constant = true;
      for (std::size_t r : rows) {
        if (x_(r, f) != x_(rows.front(), f)) {
          constant = false;
          break;
        }
      }
      if (constant) continue;
      ++scored;
      auto c = best_split_for_feature(x_, y_, rows, f, params_.min_samples_leaf);
      if (better_split(c, best)) best = c;
    }
    if (!best.valid) return make_leaf(rows);

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].feature = static_cast<int>(best.feature);
    nodes_[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const std::uint8_t> y_;
  const ForestParams& params_;
  Rng& rng_;
  std::size_t per_split_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

// Greedy entropy tree over the given rows (duplicates allowed, as produced by
// bootstrap resampling). Ties between equal-gain splits go to the lowest
// feature index, then the lowest threshold.
inline DecisionTree fit_tree(const Matrix& x, std::span<const std::uint8_t> y,
                             std::vector<std::size_t> rows,
                             const ForestParams& params, Rng& rng) {
  params.validate();
  if (x.rows() != y.size()) {
    throw InvalidArgument("fit_tree: feature rows and label length differ");
  }
  if (rows.empty() || x.cols() == 0) throw InvalidArgument("fit_tree: empty input");
  return detail::TreeBuilder(x, y, params, rng).build(std::move(rows));
}

inline DecisionTree fit_tree(const Matrix& x, std::span<const std::uint8_t> y,
                             const ForestParams& params, Rng& rng) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return fit_tree(x, y, std::move(rows), params, rng);
}

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(ForestParams params, std::vector<DecisionTree> trees,
               std::size_t n_features)
      : params_(std::move(params)), trees_(std::move(trees)),
        n_features_(n_features) {}

  // Arithmetic mean of per-tree leaf probabilities, summed in tree order.
  double predict_proba(std::span<const double> x) const {
    if (x.size() != n_features_) {
      throw InvalidArgument("predict_proba: expected " +
                            std::to_string(n_features_) + " features, got " +
                            std::to_string(x.size()));
    }
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict_proba(x);
    return sum / static_cast<double>(trees_.size());
  }

  const ForestParams& params() const { return params_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }

  friend bool operator==(const RandomForest&, const RandomForest&) = default;

 private:
  ForestParams params_;
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
};

// Tree t draws its bootstrap sample and feature subsets from
// Rng(derive_seed(seed, t)), so the fit is identical whether trees are grown
// serially or in parallel.
inline RandomForest fit_forest(const Matrix& x, std::span<const std::uint8_t> y,
                               const ForestParams& params) {
  params.validate();
  if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("fit_forest: empty input");
  if (x.rows() != y.size()) {
    throw InvalidArgument("fit_forest: feature rows and label length differ");
  }
  std::vector<DecisionTree> trees(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t));
    std::vector<std::size_t> rows(x.rows());
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.below(x.rows());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees[t] = fit_tree(x, y, std::move(rows), params, rng);
  });
  return RandomForest(params, std::move(trees), x.cols());
}

// JSON: {"format": "mlshap.forest", "version": 1, "params": {...},
//        "n_features": M, "trees": [[node, ...], ...]} where a node is
// {"leaf": p} or {"feature": f, "threshold": t, "left": i, "right": j}.
inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json params_to_json(const ForestParams& p) {
  nlohmann::json j;
  j["n_trees"] = p.n_trees;
  j["max_depth"] = p.max_depth;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["max_features"] = p.max_features ? nlohmann::json(*p.max_features)
                                     : nlohmann::json("sqrt");
  j["seed"] = p.seed;
  j["bootstrap"] = p.bootstrap;
  j["criterion"] = "entropy";
  return j;
}

inline ForestParams params_from_json(const nlohmann::json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<std::size_t>();
  p.max_depth = j.at("max_depth").get<std::size_t>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  const auto& mf = j.at("max_features");
  if (mf.is_string()) {
    if (mf.get<std::string>() != "sqrt") {
      throw ParseError("forest: unknown max_features '" + mf.get<std::string>() + "'");
    }
  } else {
    p.max_features = mf.get<std::size_t>();
  }
  p.seed = j.at("seed").get<std::uint64_t>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.validate();
  return p;
}

inline nlohmann::json to_json(const RandomForest& forest) {
  nlohmann::json j;
  j["format"] = "mlshap.forest";
  j["version"] = kForestFormatVersion;
  j["params"] = params_to_json(forest.params());
  j["n_features"] = forest.n_features();
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const auto& tree : forest.trees()) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes()) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.probability}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return j;
}

inline RandomForest forest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "mlshap.forest") throw ParseError("not a forest document");
    if (j.at("version").get<int>() != kForestFormatVersion) {
      throw ParseError("unsupported forest format version");
    }
    const auto params = params_from_json(j.at("params"));
    const auto n_features = j.at("n_features").get<std::size_t>();
    std::vector<DecisionTree> trees;
    for (const auto& jt : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& jn : jt) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.probability = jn.at("leaf").get<double>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          const auto count = static_cast<int>(jt.size());
          if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features ||
              n.left <= static_cast<int>(nodes.size()) ||
              n.right <= static_cast<int>(nodes.size()) || n.left >= count ||
              n.right >= count) {
            throw ParseError("forest: malformed tree node");
          }
        }
        nodes.push_back(n);
      }
      if (nodes.empty()) throw ParseError("forest: empty tree");
      trees.emplace_back(std::move(nodes), n_features);
    }
    if (trees.size() != params.n_trees) {
      throw ParseError("forest: tree count does not match n_trees");
    }
    return RandomForest(params, std::move(trees), n_features);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("forest: ") + e.what());
  }
}

}  // namespace mlshap
