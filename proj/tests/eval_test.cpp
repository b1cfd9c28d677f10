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

#include <gtest/gtest.h>

#include <cmath>

#include "mlshap/eval.hpp"
#include "test_util.hpp"

namespace mlshap {
namespace {

LabelMatrix lm(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> v) {
  return LabelMatrix(rows, cols, std::move(v));
}

TEST(Metrics, HandComputedValues) {
  const auto truth = lm(2, 3, {1, 0, 1, 0, 1, 0});
  const auto pred = lm(2, 3, {1, 1, 0, 0, 1, 0});
  // TP=2, FP=1, FN=1; 2 wrong entries of 6; 1 of 2 rows exact.
  EXPECT_DOUBLE_EQ(hamming_loss(truth, pred), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(subset_accuracy(truth, pred), 0.5);
  EXPECT_DOUBLE_EQ(micro_f1(truth, pred), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(hamming_loss(truth, truth), 0.0);
  EXPECT_DOUBLE_EQ(subset_accuracy(truth, truth), 1.0);
  EXPECT_DOUBLE_EQ(micro_f1(truth, truth), 1.0);
}

TEST(Metrics, EdgeCases) {
  const auto zeros = lm(2, 2, {0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(micro_f1(zeros, zeros), 1.0);
  EXPECT_DOUBLE_EQ(micro_f1(zeros, lm(2, 2, {1, 0, 0, 0})), 0.0);
  EXPECT_THROW(hamming_loss(zeros, lm(1, 2, {0, 0})), InvalidArgument);
  EXPECT_THROW(hamming_loss(LabelMatrix(0, 2), LabelMatrix(0, 2)), InvalidArgument);
}

TEST(Metrics, NamesAndDirection) {
  for (Metric m : all_metrics()) EXPECT_EQ(parse_metric(metric_name(m)), m);
  EXPECT_TRUE(lower_is_better(Metric::kHammingLoss));
  EXPECT_FALSE(lower_is_better(Metric::kMicroF1));
  EXPECT_THROW(parse_metric("auc"), InvalidArgument);
}

TEST(Presets, ReferenceHyperparameters) {
  const auto br = preset("paper-br", 7);
  EXPECT_EQ(br.algorithm, Algorithm::kBinaryRelevance);
  EXPECT_EQ(br.forest.max_depth, 15u);
  EXPECT_EQ(br.forest.min_samples_leaf, 2u);
  EXPECT_EQ(br.forest.seed, 7u);
  const auto cc = preset("paper-cc", 7);
  EXPECT_EQ(cc.algorithm, Algorithm::kClassifierChain);
  EXPECT_EQ(cc.forest.max_depth, 3u);
  EXPECT_FALSE(cc.chain_order.has_value());
  const auto knn = preset("paper-mlknn", 7);
  EXPECT_EQ(knn.algorithm, Algorithm::kMlknn);
  EXPECT_EQ(knn.k, 5u);
  EXPECT_THROW(preset("paper-svm", 1), InvalidArgument);
}

TEST(Grid, CartesianProductLastAxisFastest) {
  const auto g = ParamGrid::cartesian(ModelConfig{}, {{"max_depth", {3, 15}},
                                                      {"min_samples_leaf", {1, 2, 4}}});
  ASSERT_EQ(g.points.size(), 6u);
  EXPECT_EQ(g.points[1], (GridPoint{{"max_depth", 3}, {"min_samples_leaf", 2}}));
  EXPECT_EQ(g.config_at(5).forest.max_depth, 15u);
  EXPECT_EQ(g.config_at(5).forest.min_samples_leaf, 4u);
  EXPECT_THROW(ParamGrid::cartesian(ModelConfig{}, {{"k", {}}}), InvalidArgument);
  ModelConfig c;
  EXPECT_THROW(c.set("gamma", 1), InvalidArgument);
  EXPECT_THROW(c.set("k", 2.5), InvalidArgument);
}

TEST(Summary, SampleStandardDeviation) {
  const auto s = summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(summarize({4}).stddev, 0.0);
}

TEST(GridSearch, CountsCyclesAndIsDeterministic) {
  const Dataset ds = testing::synthetic_dataset(60, 4, 3, 2);
  ModelConfig base;
  base.algorithm = Algorithm::kMlknn;
  const auto grid = ParamGrid::cartesian(base, {{"k", {1, 3, 5}}});
  const auto plan = make_folds(ds.n_instances(), 2, 3, 9);
  std::size_t cycles = 0;
  const auto a = grid_search(ds, grid, plan, Metric::kHammingLoss,
                             [&](std::size_t, std::size_t) { ++cycles; });
  EXPECT_EQ(cycles, 18u);
  EXPECT_EQ(a.total_evaluations, 18u);
  ASSERT_EQ(a.results.size(), 3u);
  for (const auto& r : a.results) EXPECT_EQ(r.metrics.at("hamming_loss").values.size(), 6u);
  const auto b = grid_search(ds, grid, plan, Metric::kHammingLoss);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());

  // The best index minimises the mean hamming loss; first point wins ties.
  std::size_t best = 0;
  for (std::size_t p = 1; p < 3; ++p) {
    if (a.results[p].metrics.at("hamming_loss").mean <
        a.results[best].metrics.at("hamming_loss").mean) {
      best = p;
    }
  }
  EXPECT_EQ(a.best_index, best);
}

TEST(GridSearch, FoldScoreMatchesManualEvaluation) {
  const Dataset ds = testing::synthetic_dataset(40, 3, 2, 4);
  ModelConfig base;
  base.algorithm = Algorithm::kMlknn;
  base.k = 3;
  const auto grid = ParamGrid::cartesian(base, {});
  const auto plan = make_folds(ds.n_instances(), 1, 4, 1);
  const auto r = grid_search(ds, grid, plan, Metric::kMicroF1);
  const auto& f = plan.assignments[0][2];
  const auto model = fit_mlknn(split(ds, f.train), 3);
  const auto test = split(ds, f.test);
  const double expected = micro_f1(test.labels, predict_label_matrix(model, test.features));
  EXPECT_DOUBLE_EQ(r.results[0].metrics.at("micro_f1").values[2], expected);
  EXPECT_EQ(r.best_index, 0u);
}

TEST(GridSearch, RejectsMismatchedPlan) {
  const Dataset ds = testing::synthetic_dataset(20, 3, 2, 4);
  const auto grid = ParamGrid::cartesian(ModelConfig{}, {});
  EXPECT_THROW(grid_search(ds, grid, make_folds(21, 1, 2, 0), Metric::kHammingLoss),
               InvalidArgument);
}

}  // namespace
}  // namespace mlshap
