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

// Model-agnostic Shapley attributions for a scalar prediction.
//
// A coalition S of observed features is valued by the interventional
// expectation
//
//   v(S) = 1/B * sum_b f(x_S, b_{N\S})
//
// over a background set of B rows. Two estimators are provided:
//
//  * exact_shapley enumerates all 2^M coalitions and applies the Shapley
//    weights |S|!(M-|S|-1)!/M! directly (M <= kExactFeatureCap).
//  * kernel_shap fits the additive surrogate g(z) = phi0 + sum_j phi_j z_j by
//    weighted least squares over (sampled) coalitions, with the Shapley kernel
//    weights and the two endpoint coalitions imposed as hard constraints.
//
// With every proper coalition enumerated the kernel fit reproduces the exact
// values.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlshap/common.hpp"
#include "mlshap/multilabel.hpp"

namespace mlshap {

inline constexpr std::size_t kExactFeatureCap = 16;

// Scalar prediction function over width-M feature vectors.
struct ExplainTarget {
  std::function<double(std::span<const double>)> f;
  std::size_t n_features = 0;

  double operator()(std::span<const double> x) const { return f(x); }
};

// z' in {0,1}^M; a set bit means the feature is observed.
class CoalitionMask {
 public:
  CoalitionMask() = default;
  explicit CoalitionMask(std::size_t n, bool value = false) : bits_(n, value) {}
  static CoalitionMask from_bits(std::uint64_t bits, std::size_t n) {
    CoalitionMask m(n);
    for (std::size_t i = 0; i < n; ++i) m.bits_[i] = (bits >> i) & 1u;
    return m;
  }

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v = true) { bits_[i] = v; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  bool all() const { return count() == size(); }

  friend bool operator==(const CoalitionMask&, const CoalitionMask&) = default;
  friend auto operator<=>(const CoalitionMask&, const CoalitionMask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct BackgroundSet {
  Matrix rows;

  std::size_t size() const { return rows.rows(); }
  std::size_t width() const { return rows.cols(); }
};

struct Explanation {
  std::size_t instance = 0;
  std::size_t label = 0;
  double base_value = 0.0;  // phi0 = v(empty)
  double fx = 0.0;          // f(x)
  std::vector<double> phi;
  std::vector<double> feature_values;
  std::vector<std::string> feature_names;

  double local_accuracy_gap() const {
    double sum = base_value;
    for (double p : phi) sum += p;
    return std::abs(sum - fx);
  }

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

namespace detail {

inline void check_inputs(const ExplainTarget& target, std::span<const double> x,
                         const BackgroundSet& background) {
  if (!target.f) throw InvalidArgument("explain: target has no function");
  if (target.n_features == 0) throw InvalidArgument("explain: target has no features");
  if (x.size() != target.n_features) {
    throw InvalidArgument("explain: instance width " + std::to_string(x.size()) +
                          " does not match target width " +
                          std::to_string(target.n_features));
  }
  if (background.size() == 0) throw InvalidArgument("explain: empty background set");
  if (background.width() != target.n_features) {
    throw InvalidArgument("explain: background width " +
                          std::to_string(background.width()) +
                          " does not match target width " +
                          std::to_string(target.n_features));
  }
}

template <typename IsObserved>
double coalition_value(const ExplainTarget& target, std::span<const double> x,
                       const BackgroundSet& background, IsObserved observed) {
  const std::size_t m = x.size();
  bool all = true;
  for (std::size_t j = 0; j < m && all; ++j) all = observed(j);
  if (all) return target(x);
  std::vector<double> hybrid(m);
  double sum = 0.0;
  for (std::size_t b = 0; b < background.size(); ++b) {
    auto row = background.rows.row(b);
    for (std::size_t j = 0; j < m; ++j) hybrid[j] = observed(j) ? x[j] : row[j];
    sum += target(hybrid);
  }
  return sum / static_cast<double>(background.size());
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(c);
}

inline CoalitionMask mask_of(std::uint64_t bits, std::size_t m) {
  return CoalitionMask::from_bits(bits, m);
}

}  // namespace detail

// Mean of f over background rows with the observed features taken from x.
// The full coalition returns f(x) itself.
inline double eval_coalition(const ExplainTarget& target, std::span<const double> x,
                             const CoalitionMask& mask,
                             const BackgroundSet& background) {
  detail::check_inputs(target, x, background);
  if (mask.size() != x.size()) {
    throw InvalidArgument("eval_coalition: mask width does not match instance");
  }
  return detail::coalition_value(target, x, background,
                                 [&](std::size_t j) { return mask[j]; });
}

// Shapley values by enumerating every coalition.
inline Explanation exact_shapley(const ExplainTarget& target, std::span<const double> x,
                                 const BackgroundSet& background) {
  detail::check_inputs(target, x, background);
  const std::size_t m = x.size();
  if (m > kExactFeatureCap) {
    throw InvalidArgument("exact_shapley: " + std::to_string(m) +
                          " features exceeds the enumeration cap of " +
                          std::to_string(kExactFeatureCap));
  }
  const std::uint64_t n_masks = std::uint64_t{1} << m;
  std::vector<double> value(n_masks);
  parallel_for(n_masks, [&](std::size_t s) {
    value[s] = detail::coalition_value(target, x, background, [&](std::size_t j) {
      return ((s >> j) & 1u) != 0;
    });
  });

  // |S|!(M-|S|-1)!/M! = 1 / (M * C(M-1, |S|))
  std::vector<double> weight(m);
  for (std::size_t k = 0; k < m; ++k) {
    weight[k] = 1.0 / (static_cast<double>(m) * detail::binomial(m - 1, k));
  }

  Explanation e;
  e.base_value = value[0];
  e.fx = value[n_masks - 1];
  e.phi.assign(m, 0.0);
  e.feature_values.assign(x.begin(), x.end());
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double phi = 0.0;
    for (std::uint64_t s = 0; s < n_masks; ++s) {
      if (s & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(s))] * (value[s | bit] - value[s]);
    }
    e.phi[i] = phi;
  }
  return e;
}

// Shapley kernel weight (M-1) / (C(M,z) z (M-z)) of one coalition of size z.
inline double kernel_weight(std::size_t m, std::size_t z) {
  if (z == 0 || z >= m) {
    throw InvalidArgument("kernel_weight: coalition size must lie in [1, M-1]");
  }
  return static_cast<double>(m - 1) /
         (detail::binomial(m, z) * static_cast<double>(z) * static_cast<double>(m - z));
}

// Argmin_c sum_i w_i (r_i - A_i c)^2 via the normal equations and a Cholesky
// factorisation. Throws EstimationError when A^T W A is numerically singular.
inline std::vector<double> solve_weighted_ls(const Matrix& design,
                                             std::span<const double> weights,
                                             std::span<const double> responses) {
  const std::size_t n = design.rows();
  const std::size_t p = design.cols();
  if (weights.size() != n || responses.size() != n) {
    throw InvalidArgument("solve_weighted_ls: weights/responses length != rows");
  }
  if (p == 0) return {};
  if (n < p) {
    throw EstimationError("solve_weighted_ls: " + std::to_string(n) +
                          " rows cannot determine " + std::to_string(p) + " coefficients");
  }
  for (double w : weights) {
    if (!(w > 0)) throw InvalidArgument("solve_weighted_ls: weights must be positive");
  }

  Matrix gram(p, p);
  std::vector<double> rhs(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto a = design.row(r);
    const double w = weights[r];
    for (std::size_t i = 0; i < p; ++i) {
      if (a[i] == 0.0) continue;
      const double wa = w * a[i];
      rhs[i] += wa * responses[r];
      for (std::size_t j = 0; j <= i; ++j) gram(i, j) += wa * a[j];
    }
  }
  double max_diag = 0.0;
  for (std::size_t i = 0; i < p; ++i) max_diag = std::max(max_diag, gram(i, i));
  const double tolerance = 1e-12 * max_diag;

  // In-place lower Cholesky factor.
  for (std::size_t j = 0; j < p; ++j) {
    double d = gram(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= gram(j, k) * gram(j, k);
    if (!(d > tolerance)) {
      throw EstimationError(
          "solve_weighted_ls: design matrix is rank deficient (increase the "
          "coalition budget)");
    }
    const double l = std::sqrt(d);
    gram(j, j) = l;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = gram(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= gram(i, k) * gram(j, k);
      gram(i, j) = s / l;
    }
  }
  std::vector<double> y(p);
  for (std::size_t i = 0; i < p; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= gram(i, k) * y[k];
    y[i] = s / gram(i, i);
  }
  std::vector<double> c(p);
  for (std::size_t i = p; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < p; ++k) s -= gram(k, i) * c[k];
    c[i] = s / gram(i, i);
  }
  return c;
}

// Number of coalition evaluations, or every proper coalition.
class Budget {
 public:
  static Budget full() { return Budget(std::nullopt); }
  static Budget samples(std::size_t n) { return Budget(n); }
  static Budget default_for(std::size_t n_features) {
    return Budget(2 * n_features + 2048);
  }
  // "full" or a positive integer.
  static Budget parse(std::string_view text) {
    if (text == "full") return full();
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ParseError("budget must be 'full' or a positive integer, got '" +
                       std::string(text) + "'");
    }
    return samples(n);
  }

  bool is_full() const { return !count_; }
  std::size_t count() const { return count_.value_or(0); }
  std::string to_string() const { return count_ ? std::to_string(*count_) : "full"; }

 private:
  explicit Budget(std::optional<std::size_t> count) : count_(count) {}
  std::optional<std::size_t> count_;
};

// Weighted coalitions to be evaluated, keyed by bitmask (M <= 63).
using CoalitionSet = std::map<std::uint64_t, double>;

namespace detail {

inline void for_each_subset_of_size(std::size_t m, std::size_t size,
                                    const std::function<void(std::uint64_t)>& fn) {
  if (size == 0 || size > m) return;
  // Gosper's hack over m-bit words.
  std::uint64_t s = (std::uint64_t{1} << size) - 1;
  const std::uint64_t limit = std::uint64_t{1} << m;
  while (s < limit) {
    fn(s);
    const std::uint64_t c = s & (~s + 1);
    const std::uint64_t r = s + c;
    s = (((r ^ s) >> 2) / c) | r;
  }
}

inline std::uint64_t random_subset(Rng& rng, std::size_t m, std::size_t size) {
  std::uint64_t bits = 0;
  for (std::size_t j : rng.sample_without_replacement(m, size)) {
    bits |= std::uint64_t{1} << j;
  }
  return bits;
}

}  // namespace detail

// Chooses the coalitions used by kernel_shap and their regression weights.
//
// Size classes {s, M-s} are visited from the extremes inward; a class is
// enumerated completely (each coalition carrying its kernel weight) while the
// remaining budget covers it. Once a class no longer fits, the remaining
// budget is spent on random draws: a class is picked with probability
// proportional to its total kernel weight, a uniform subset of that size is
// drawn, and it is added together with its complement. The leftover kernel
// weight is split over the draws, so the sampled objective is an unbiased
// estimate of the fully enumerated one.
inline CoalitionSet plan_coalitions(std::size_t m, const Budget& budget, Rng& rng) {
  if (m < 2) return {};
  if (m > 62) throw InvalidArgument("kernel_shap: at most 62 features are supported");
  const double total_proper = std::ldexp(1.0, static_cast<int>(m)) - 2.0;
  std::size_t remaining;
  if (budget.is_full()) {
    if (m > kExactFeatureCap) {
      throw InvalidArgument("kernel_shap: a full budget requires at most " +
                            std::to_string(kExactFeatureCap) + " features");
    }
    remaining = static_cast<std::size_t>(total_proper);
  } else {
    if (budget.count() < 2) throw InvalidArgument("kernel_shap: budget must be >= 2");
    remaining = budget.count();
  }

  CoalitionSet set;
  const std::size_t half = m / 2;
  std::size_t s = 1;
  for (; s <= half; ++s) {
    const bool paired = s != m - s;
    const double count = detail::binomial(m, s) * (paired ? 2.0 : 1.0);
    if (count > static_cast<double>(remaining)) break;
    const double w = kernel_weight(m, s);
    detail::for_each_subset_of_size(m, s, [&](std::uint64_t bits) { set[bits] = w; });
    if (paired) {
      detail::for_each_subset_of_size(m, m - s, [&](std::uint64_t bits) { set[bits] = w; });
    }
    remaining -= static_cast<std::size_t>(count);
  }
  if (s > half || remaining == 0) return set;

  // Sampling over the classes that did not fit.
  std::vector<std::size_t> sizes;
  std::vector<double> mass;
  double leftover = 0.0;
  double leftover_count = 0.0;
  for (std::size_t t = s; t <= half; ++t) {
    const bool paired = t != m - t;
    const double class_mass =
        static_cast<double>(m - 1) / static_cast<double>(t * (m - t)) * (paired ? 2.0 : 1.0);
    sizes.push_back(t);
    mass.push_back(class_mass);
    leftover += class_mass;
    leftover_count += detail::binomial(m, t) * (paired ? 2.0 : 1.0);
  }
  const double target =
      std::min(static_cast<double>(remaining), leftover_count);
  std::map<std::uint64_t, double> hits;
  double draws = 0.0;
  const std::size_t max_draws = 64 * remaining + 1024;
  const std::uint64_t full_bits = (std::uint64_t{1} << m) - 1;
  for (std::size_t d = 0; d < max_draws && static_cast<double>(hits.size()) < target; ++d) {
    double u = rng.uniform() * leftover;
    std::size_t c = 0;
    while (c + 1 < sizes.size() && u >= mass[c]) {
      u -= mass[c];
      ++c;
    }
    const std::uint64_t bits = detail::random_subset(rng, m, sizes[c]);
    hits[bits] += 1.0;
    hits[full_bits ^ bits] += 1.0;
    draws += 2.0;
  }
  for (const auto& [bits, n] : hits) set[bits] = leftover * n / draws;
  return set;
}

// Kernel SHAP estimate. The endpoint constraints g(empty) = v(empty) and
// g(full) = f(x) are eliminated by substituting
// phi_M = (f(x) - phi0) - sum_{j<M} phi_j, so local accuracy holds by
// construction.
inline Explanation kernel_shap(const ExplainTarget& target, std::span<const double> x,
                               const BackgroundSet& background, const Budget& budget,
                               std::uint64_t seed) {
  detail::check_inputs(target, x, background);
  const std::size_t m = x.size();
  Explanation e;
  e.feature_values.assign(x.begin(), x.end());
  e.base_value = detail::coalition_value(target, x, background,
                                         [](std::size_t) { return false; });
  e.fx = target(x);
  const double delta = e.fx - e.base_value;
  if (m == 1) {
    e.phi = {delta};
    return e;
  }

  Rng rng(seed);
  const CoalitionSet coalitions = plan_coalitions(m, budget, rng);
  std::vector<std::uint64_t> masks;
  std::vector<double> weights;
  for (const auto& [bits, w] : coalitions) {
    masks.push_back(bits);
    weights.push_back(w);
  }
  std::vector<double> value(masks.size());
  parallel_for(masks.size(), [&](std::size_t i) {
    value[i] = detail::coalition_value(target, x, background, [&](std::size_t j) {
      return ((masks[i] >> j) & 1u) != 0;
    });
  });

  const std::size_t last = m - 1;
  Matrix design(masks.size(), last);
  std::vector<double> response(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const double z_last = static_cast<double>((masks[i] >> last) & 1u);
    for (std::size_t j = 0; j < last; ++j) {
      design(i, j) = static_cast<double>((masks[i] >> j) & 1u) - z_last;
    }
    response[i] = value[i] - e.base_value - z_last * delta;
  }
  const auto coef = solve_weighted_ls(design, weights, response);
  e.phi.assign(m, 0.0);
  double partial = 0.0;
  for (std::size_t j = 0; j < last; ++j) {
    e.phi[j] = coef[j];
    partial += coef[j];
  }
  e.phi[last] = delta - partial;
  return e;
}

enum class Estimator { kExact, kKernel };

inline Estimator parse_estimator(std::string_view name) {
  if (name == "exact") return Estimator::kExact;
  if (name == "kernel") return Estimator::kKernel;
  throw ParseError("unknown estimator '" + std::string(name) +
                   "' (expected exact or kernel)");
}

inline std::string estimator_name(Estimator e) {
  return e == Estimator::kExact ? "exact" : "kernel";
}

// Up to `size` distinct rows drawn without replacement (all rows when the
// matrix is smaller), kept in ascending row order.
inline BackgroundSet sample_background(const Matrix& rows, std::size_t size,
                                       std::uint64_t seed) {
  if (rows.rows() == 0) throw InvalidArgument("sample_background: no rows");
  if (size == 0) throw InvalidArgument("sample_background: size must be >= 1");
  Rng rng(seed);
  auto picked = rng.sample_without_replacement(rows.rows(), size);
  std::sort(picked.begin(), picked.end());
  BackgroundSet bg{Matrix(0, rows.cols())};
  std::vector<double> data;
  for (std::size_t r : picked) {
    auto row = rows.row(r);
    data.insert(data.end(), row.begin(), row.end());
  }
  bg.rows = Matrix(picked.size(), rows.cols(), std::move(data));
  return bg;
}

// Scalar target for one label's probability.
inline ExplainTarget label_target(const MultiLabelModel& model, std::size_t label) {
  if (label >= model.n_labels()) {
    throw InvalidArgument("label index " + std::to_string(label) + " out of range for " +
                          std::to_string(model.n_labels()) + " labels");
  }
  return ExplainTarget{[&model, label](std::span<const double> h) {
                         return model.predict_label_proba(h, label);
                       },
                       model.n_features()};
}

struct ExplainOptions {
  Estimator estimator = Estimator::kKernel;
  std::optional<Budget> budget;  // nullopt => Budget::default_for(M)
  std::uint64_t seed = 0;
};

// One explanation of the label probability per requested label.
inline std::vector<Explanation> explain_instance(const MultiLabelModel& model,
                                                 std::span<const double> x,
                                                 const BackgroundSet& background,
                                                 std::span<const std::size_t> labels,
                                                 const ExplainOptions& options,
                                                 std::size_t instance_index = 0) {
  if (options.estimator == Estimator::kExact && model.n_features() > kExactFeatureCap) {
    throw InvalidArgument("exact estimator supports at most " +
                          std::to_string(kExactFeatureCap) + " features; model has " +
                          std::to_string(model.n_features()) + " (use the kernel estimator)");
  }
  std::vector<Explanation> out;
  for (std::size_t label : labels) {
    const auto target = label_target(model, label);
    Explanation e = options.estimator == Estimator::kExact
                        ? exact_shapley(target, x, background)
                        : kernel_shap(target, x, background,
                                      options.budget.value_or(
                                          Budget::default_for(model.n_features())),
                                      options.seed);
    e.instance = instance_index;
    e.label = label;
    e.feature_names = model.feature_names();
    out.push_back(std::move(e));
  }
  return out;
}

// Explanation JSON: {instance, label, base_value, fx,
//                    phi: [{feature, value, shap}, ...]}.
inline nlohmann::json to_json(const Explanation& e) {
  nlohmann::json j;
  j["instance"] = e.instance;
  j["label"] = e.label;
  j["base_value"] = e.base_value;
  j["fx"] = e.fx;
  auto& phi = j["phi"] = nlohmann::json::array();
  for (std::size_t i = 0; i < e.phi.size(); ++i) {
    phi.push_back({{"feature", i < e.feature_names.size() ? e.feature_names[i]
                                                          : "f" + std::to_string(i)},
                   {"value", e.feature_values.at(i)},
                   {"shap", e.phi[i]}});
  }
  return j;
}

inline Explanation explanation_from_json(const nlohmann::json& j) {
  try {
    Explanation e;
    e.instance = j.at("instance").get<std::size_t>();
    e.label = j.at("label").get<std::size_t>();
    e.base_value = j.at("base_value").get<double>();
    e.fx = j.at("fx").get<double>();
    for (const auto& p : j.at("phi")) {
      e.feature_names.push_back(p.at("feature").get<std::string>());
      e.feature_values.push_back(p.at("value").get<double>());
      e.phi.push_back(p.at("shap").get<double>());
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("explanation: ") + ex.what());
  }
}

}  // namespace mlshap
