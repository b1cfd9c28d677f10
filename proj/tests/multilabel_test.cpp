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

#include <set>

#include "mlshap/multilabel.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mlshap {
namespace {

ForestParams small_forest(std::uint64_t seed) {
  ForestParams p;
  p.n_trees = 8;
  p.max_depth = 6;
  p.seed = seed;
  return p;
}

// Copy of `ds` keeping label columns in the given order.
Dataset select_labels(const Dataset& ds, const std::vector<std::size_t>& cols) {
  Dataset out = ds;
  out.labels = LabelMatrix(ds.n_instances(), cols.size());
  out.label_names.clear();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.label_names.push_back(ds.label_names[cols[j]]);
    for (std::size_t r = 0; r < ds.n_instances(); ++r) out.labels(r, j) = ds.labels(r, cols[j]);
  }
  return out;
}

TEST(Algorithm, Names) {
  for (auto a : {Algorithm::kBinaryRelevance, Algorithm::kClassifierChain, Algorithm::kMlknn}) {
    EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
  }
  EXPECT_THROW(parse_algorithm("svm"), std::exception);
}

TEST(BinaryRelevance, OneForestPerLabel) {
  const Dataset ds = testing::synthetic_dataset(120, 6, 4, 1);
  const auto m = fit_br(ds, small_forest(3));
  EXPECT_EQ(m.algorithm(), Algorithm::kBinaryRelevance);
  EXPECT_EQ(m.n_labels(), 4u);
  EXPECT_EQ(std::get<BRModel>(m.variant()).per_label_models.size(), 4u);
  for (std::size_t r = 0; r < 10; ++r) {
    const auto p = m.predict_proba(ds.features.row(r));
    ASSERT_EQ(p.size(), 4u);
    for (std::size_t l = 0; l < 4; ++l) {
      EXPECT_EQ(p[l], m.predict_label_proba(ds.features.row(r), l));
    }
  }
  EXPECT_THROW(m.predict_label_proba(ds.features.row(0), 4), InvalidArgument);
}

TEST(BinaryRelevance, LabelOutputsIndependentOfOtherColumns) {
  const Dataset ds = testing::synthetic_dataset(100, 5, 5, 8);
  const auto full = fit_br(ds, small_forest(11));
  // Permuted and reduced label sets.
  const std::vector<std::vector<std::size_t>> layouts{{4, 2, 0, 1, 3}, {2}, {3, 2}};
  for (const auto& layout : layouts) {
    const auto m = fit_br(select_labels(ds, layout), small_forest(11));
    for (std::size_t r = 0; r < ds.n_instances(); ++r) {
      const auto a = full.predict_proba(ds.features.row(r));
      const auto b = m.predict_proba(ds.features.row(r));
      for (std::size_t j = 0; j < layout.size(); ++j) ASSERT_EQ(b[j], a[layout[j]]);
    }
  }
}

TEST(ClassifierChain, LinkWidthsAndOrder) {
  const Dataset ds = testing::synthetic_dataset(90, 4, 3, 2);
  const auto m = fit_cc(ds, small_forest(5), std::vector<std::size_t>{2, 0, 1});
  const auto& cc = std::get<CCModel>(m.variant());
  EXPECT_EQ(cc.chain_order, (std::vector<std::size_t>{2, 0, 1}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(cc.chained_models[j].n_features(), 4 + j);
  EXPECT_THROW(fit_cc(ds, small_forest(5), std::vector<std::size_t>{0, 0, 1}),
               InvalidArgument);
}

TEST(ClassifierChain, RandomOrderIsSeeded) {
  EXPECT_EQ(random_chain_order(12, 4), random_chain_order(12, 4));
  auto o = random_chain_order(12, 4);
  std::sort(o.begin(), o.end());
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(o[i], i);
  bool differs = false;
  for (std::uint64_t s = 0; s < 5 && !differs; ++s) {
    differs = random_chain_order(12, s) != random_chain_order(12, s + 10);
  }
  EXPECT_TRUE(differs);
}

TEST(ClassifierChain, InferenceFeedsHardDecisions) {
  const Dataset ds = testing::synthetic_dataset(80, 4, 3, 6);
  const auto m = fit_cc(ds, small_forest(2), std::vector<std::size_t>{1, 2, 0});
  const auto& cc = std::get<CCModel>(m.variant());
  for (std::size_t r = 0; r < 20; ++r) {
    std::vector<double> h(ds.features.row(r).begin(), ds.features.row(r).end());
    std::vector<double> expected(3);
    for (std::size_t j = 0; j < 3; ++j) {
      const double p = cc.chained_models[j].predict_proba(h);
      expected[cc.chain_order[j]] = p;
      h.push_back(p >= 0.5 ? 1.0 : 0.0);
    }
    const auto got = m.predict_proba(ds.features.row(r));
    EXPECT_EQ(got, expected);
    for (std::size_t l = 0; l < 3; ++l) {
      EXPECT_EQ(m.predict_label_proba(ds.features.row(r), l), expected[l]);
    }
  }
}

TEST(Mlknn, MatchesBruteForceOracle) {
  const Dataset train = testing::synthetic_dataset(60, 4, 3, 13);
  const Dataset test = testing::synthetic_dataset(25, 4, 3, 14);
  const auto m = fit_mlknn(train, 5, 1.0);
  oracle::BruteMlknn o{5, 1.0, {}, {}};
  for (std::size_t r = 0; r < train.n_instances(); ++r) {
    o.x.emplace_back(train.features.row(r).begin(), train.features.row(r).end());
    o.y.emplace_back(train.labels.row(r).begin(), train.labels.row(r).end());
  }
  for (std::size_t r = 0; r < test.n_instances(); ++r) {
    const std::vector<double> q(test.features.row(r).begin(), test.features.row(r).end());
    const auto p = m.predict_proba(q);
    for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(p[l], o.score(q, l), 1e-12);
  }
}

TEST(Mlknn, NeighboursAndValidation) {
  Matrix train(4, 1);
  for (std::size_t i = 0; i < 4; ++i) train(i, 0) = static_cast<double>(i);
  const std::vector<double> q{1.5};
  // Rows 1 and 2 are equidistant; the lower index comes first.
  EXPECT_EQ(knn_indices(train, q, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(knn_indices(train, q, 2, 1), (std::vector<std::size_t>{2, 0}));
  EXPECT_THROW(knn_indices(train, q, 5), InvalidArgument);
  const Dataset ds = testing::synthetic_dataset(10, 2, 2, 1);
  EXPECT_THROW(fit_mlknn(ds, 0), InvalidArgument);
  EXPECT_THROW(fit_mlknn(ds, 10), InvalidArgument);
  EXPECT_THROW(fit_mlknn(ds, 3, 0.0), InvalidArgument);
}

TEST(Decision, ThresholdIsInclusive) {
  const std::vector<double> p{0.5, 0.4999, 0.9};
  EXPECT_EQ(predict_labels(p), (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST(ModelJson, RoundTripsAllAlgorithms) {
  const Dataset ds = testing::synthetic_dataset(50, 4, 3, 5);
  std::vector<MultiLabelModel> models{fit_br(ds, small_forest(1)),
                                      fit_cc(ds, small_forest(1)), fit_mlknn(ds, 4, 0.5)};
  for (const auto& m : models) {
    const auto text = to_json(m).dump();
    const auto back = model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back, m);
    for (std::size_t r = 0; r < 10; ++r) {
      EXPECT_EQ(back.predict_proba(ds.features.row(r)), m.predict_proba(ds.features.row(r)));
    }
  }
}

TEST(ModelJson, RejectsInconsistentDocuments) {
  const Dataset ds = testing::synthetic_dataset(50, 4, 3, 5);
  auto j = to_json(fit_cc(ds, small_forest(1)));
  auto bad = j;
  bad["chain_order"] = {0, 0, 1};
  EXPECT_THROW(model_from_json(bad), ParseError);
  bad = j;
  bad["label_names"] = {"a", "b"};
  EXPECT_THROW(model_from_json(bad), ParseError);
  auto k = to_json(fit_mlknn(ds, 3));
  k["k"] = 7;
  EXPECT_THROW(model_from_json(k), ParseError);
}

TEST(Determinism, SameSeedSameModel) {
  const Dataset ds = testing::synthetic_dataset(70, 5, 3, 9);
  EXPECT_EQ(fit_br(ds, small_forest(4)), fit_br(ds, small_forest(4)));
  EXPECT_EQ(fit_cc(ds, small_forest(4)), fit_cc(ds, small_forest(4)));
  EXPECT_NE(fit_br(ds, small_forest(4)), fit_br(ds, small_forest(5)));
}

}  // namespace
}  // namespace mlshap
