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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "mlshap/cli.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#ifndef MLSHAP_DEFAULT_DATA_DIR
#define MLSHAP_DEFAULT_DATA_DIR "data"
#endif

namespace {

using namespace mlshap;
namespace fs = std::filesystem;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

fs::path data_dir() {
  const char* env = std::getenv("MLSHAP_DATA_DIR");
  return env ? fs::path(env) : fs::path(MLSHAP_DEFAULT_DATA_DIR);
}

// foodtruck when available, otherwise a synthetic set of the same shape.
std::pair<Dataset, std::string> foodtruck_or_standin() {
  const fs::path p = data_dir() / "foodtruck.arff";
  if (fs::exists(p)) return {load_arff(p, LabelSpec::trailing(12)), "foodtruck"};
  return {testing::synthetic_dataset(407, 21, 12, 2024, "foodtruck_standin"),
          "synthetic 407x21x12 stand-in (foodtruck.arff not found)"};
}

std::vector<double> row_vec(const Matrix& m, std::size_t r) {
  return {m.row(r).begin(), m.row(r).end()};
}

double inf_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix out(r, c);
  for (double& v : out.data()) v = 4 * rng.uniform() - 2;
  return out;
}

void oracle_equivalence() {
  const Dataset ds = testing::synthetic_dataset(300, 8, 1, 31);
  ForestParams p;
  p.n_trees = 5;
  p.seed = 7;
  const auto forest = fit_forest(ds.features, ds.label_column(0), p);
  const ExplainTarget target{[&](std::span<const double> h) { return forest.predict_proba(h); },
                             8};
  const auto bg = sample_background(ds.features, 10, 1);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto x = ds.features.row(100 + i);
    const auto ex = exact_shapley(target, x, bg);
    const auto ke = kernel_shap(target, x, bg, Budget::full(), i);
    worst = std::max(worst, inf_norm_diff(ex.phi, ke.phi));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream d;
  d << "max |kernel(full) - exact| = " << worst << " over 50 instances, " << secs << " s";
  report(worst <= 1e-6 && secs < 10.0, "oracle_equivalence", d.str());
}

void local_accuracy() {
  const auto [ds, source] = foodtruck_or_standin();
  const auto bg = sample_background(ds.features, 20, 3);
  Rng pick(99);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (int i = 0; i < 100; ++i) {
    pairs.emplace_back(pick.below(ds.n_instances()), pick.below(ds.n_labels()));
  }
  bool ok = true;
  std::ostringstream d;
  d << source << ";";
  for (const char* name : {"paper-br", "paper-cc", "paper-mlknn"}) {
    const auto model = train_model(preset(name, 1), ds);
    double worst = 0;
    std::size_t count = 0;
    for (const auto& [i, l] : pairs) {
      const std::vector<std::size_t> labels{l};
      const auto e = explain_instance(model, ds.features.row(i), bg, labels,
                                      ExplainOptions{Estimator::kKernel, Budget::samples(256), 5},
                                      i)
                         .front();
      // Recompute f(x) directly rather than trusting e.fx.
      const double fx = model.predict_label_proba(ds.features.row(i), l);
      double sum = e.base_value;
      for (double v : e.phi) sum += v;
      worst = std::max(worst, std::abs(sum - fx));
      ++count;
    }
    ok = ok && worst <= 1e-6 && count == 100;
    d << " " << name << " max gap " << worst << " (" << count << " pairs)";
  }
  report(ok, "local_accuracy", d.str());
}

void axiom_suite() {
  Rng rng(123);
  std::size_t targets = 0, violations = 0;
  double worst = 0;
  for (int trial = 0; trial < 210; ++trial) {
    const std::size_t m = 2 + rng.below(7);  // 2..8
    std::vector<double> w(m), v(m);
    for (auto& x : w) x = 2 * rng.uniform() - 1;
    for (auto& x : v) x = 2 * rng.uniform() - 1;
    const std::size_t dummy = rng.below(m);
    // Nonlinear target that never reads feature `dummy` and treats features
    // 0 and 1 symmetrically when dummy > 1.
    auto f = [w, v, m, dummy](std::span<const double> h) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != dummy) s += (j < 2 && dummy > 1 ? w[0] : w[j]) * h[j];
      }
      double prod = 1;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != dummy) prod *= 1 + 0.3 * (j < 2 && dummy > 1 ? v[0] : v[j]) * h[j];
      }
      return std::tanh(s) + prod;
    };
    auto g = [w, m](std::span<const double> h) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += std::sin(w[j] * h[j] * (j + 1));
      return s * s;
    };
    Matrix bgm = random_matrix(rng, 1 + rng.below(4), m);
    auto xm = random_matrix(rng, 1, m);
    if (dummy > 1) {
      xm(0, 1) = xm(0, 0);
      for (std::size_t r = 0; r < bgm.rows(); ++r) bgm(r, 1) = bgm(r, 0);
    }
    const BackgroundSet bg{bgm};
    const std::vector<double> x = row_vec(xm, 0);
    const double a = rng.uniform() * 3 - 1.5, b = rng.uniform() * 3 - 1.5;
    const ExplainTarget tf{f, m}, tg{g, m};
    const ExplainTarget tc{[&](std::span<const double> h) { return a * f(h) + b * g(h); }, m};

    for (int est = 0; est < 2; ++est) {
      auto run = [&](const ExplainTarget& t) {
        return est == 0 ? exact_shapley(t, x, bg) : kernel_shap(t, x, bg, Budget::full(), 0);
      };
      const auto ef = run(tf), eg = run(tg), ec = run(tc);
      double err = std::abs(ef.phi[dummy]);
      if (dummy > 1) err = std::max(err, std::abs(ef.phi[0] - ef.phi[1]));
      for (std::size_t j = 0; j < m; ++j) {
        err = std::max(err, std::abs(ec.phi[j] - (a * ef.phi[j] + b * eg.phi[j])));
      }
      // Efficiency against a directly evaluated f(x) and background mean.
      double base = 0;
      for (std::size_t r = 0; r < bgm.rows(); ++r) base += f(bgm.row(r));
      base /= static_cast<double>(bgm.rows());
      double sum = 0;
      for (double p : ef.phi) sum += p;
      err = std::max(err, std::abs(sum - (f(x) - base)));
      worst = std::max(worst, err);
      if (err > 1e-6) ++violations;
    }
    ++targets;
  }
  std::ostringstream d;
  d << targets << " random targets (M<=8), exact + kernel(full): dummy, symmetry, linearity, "
    << "efficiency; max deviation " << worst << ", violations " << violations;
  report(targets >= 200 && violations == 0, "axiom_suite", d.str());
}

void linear_closed_form() {
  Rng rng(77);
  double worst_exact = 0, worst_kernel = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t m = 2 + rng.below(15);  // up to 16 for exact
    std::vector<double> w(m);
    for (auto& x : w) x = 4 * rng.uniform() - 2;
    const ExplainTarget t{[&](std::span<const double> h) {
                            double s = 0;
                            for (std::size_t j = 0; j < m; ++j) s += w[j] * h[j];
                            return s;
                          },
                          m};
    const BackgroundSet bg{random_matrix(rng, 1, m)};
    const auto xm = random_matrix(rng, 1, m);
    const auto ex = exact_shapley(t, xm.row(0), bg);
    const auto ke = kernel_shap(t, xm.row(0), bg, Budget::default_for(m), draw);
    for (std::size_t j = 0; j < m; ++j) {
      const double expected = w[j] * (xm(0, j) - bg.rows(0, j));
      worst_exact = std::max(worst_exact, std::abs(ex.phi[j] - expected));
      worst_kernel = std::max(worst_kernel, std::abs(ke.phi[j] - expected));
    }
  }
  std::ostringstream d;
  d << "100 draws, max error exact " << worst_exact << ", kernel " << worst_kernel;
  report(worst_exact <= 1e-6 && worst_kernel <= 1e-6, "linear_closed_form", d.str());
}

void mlknn_oracle() {
  const auto [full, source] = foodtruck_or_standin();
  // First 50 instances whose pairwise distances are all distinct.
  std::vector<std::size_t> chosen;
  std::set<double> dists;
  for (std::size_t i = 0; i < full.n_instances() && chosen.size() < 50; ++i) {
    std::set<double> added;
    bool distinct = true;
    for (std::size_t j : chosen) {
      double d = 0;
      for (std::size_t f = 0; f < full.n_features(); ++f) {
        d += (full.features(i, f) - full.features(j, f)) * (full.features(i, f) - full.features(j, f));
      }
      if (dists.count(d) || !added.insert(d).second) {
        distinct = false;
        break;
      }
    }
    if (!distinct) continue;
    chosen.push_back(i);
    dists.insert(added.begin(), added.end());
  }
  const Dataset train = split(full, chosen);
  const auto model = fit_mlknn(train, 5, 1.0);
  oracle::BruteMlknn o{5, 1.0, {}, {}};
  for (std::size_t r = 0; r < train.n_instances(); ++r) {
    o.x.push_back(row_vec(train.features, r));
    o.y.emplace_back(train.labels.row(r).begin(), train.labels.row(r).end());
  }
  std::size_t mismatches = 0, checked = 0;
  double worst = 0;
  for (std::size_t r = 0; r < train.n_instances(); ++r) {
    const auto q = row_vec(train.features, r);
    const auto p = model.predict_proba(q);
    const auto yhat = predict_labels(p);
    for (std::size_t l = 0; l < train.n_labels(); ++l) {
      const double s = o.score(q, l);
      worst = std::max(worst, std::abs(s - p[l]));
      if (s != p[l] || yhat[l] != (s >= 0.5 ? 1 : 0)) ++mismatches;
      ++checked;
    }
  }
  std::ostringstream d;
  d << source << ", " << chosen.size() << " instances with distinct distances, k=5 s=1: "
    << checked << " scores, " << mismatches << " mismatches, max |diff| " << worst;
  report(chosen.size() == 50 && mismatches == 0, "mlknn_oracle", d.str());
}

void br_independence() {
  const auto [ds, source] = foodtruck_or_standin();
  auto cfg = preset("paper-br", 11);
  cfg.forest.n_trees = 25;
  const auto base = train_model(cfg, ds);
  // Reverse the label columns, then shuffle every column except label 0.
  Dataset permuted = ds;
  const std::size_t L = ds.n_labels();
  std::vector<std::size_t> order(L);
  for (std::size_t l = 0; l < L; ++l) order[l] = L - 1 - l;
  Rng rng(5);
  for (std::size_t j = 0; j < L; ++j) {
    permuted.label_names[j] = ds.label_names[order[j]];
    for (std::size_t r = 0; r < ds.n_instances(); ++r) permuted.labels(r, j) = ds.labels(r, order[j]);
  }
  // Row-shuffle the contents of every label column except the last one
  // (which holds original label 0).
  for (std::size_t j = 0; j + 1 < L; ++j) {
    std::vector<std::uint8_t> col = permuted.label_column(j);
    rng.shuffle(col);
    for (std::size_t r = 0; r < ds.n_instances(); ++r) permuted.labels(r, j) = col[r];
  }
  const auto other = train_model(cfg, permuted);
  std::size_t diffs = 0;
  for (std::size_t r = 0; r < ds.n_instances(); ++r) {
    const auto a = base.predict_proba(ds.features.row(r));
    const auto b = other.predict_proba(ds.features.row(r));
    if (a[0] != b[L - 1]) ++diffs;
  }
  // Reordering alone keeps every label bit-exact.
  Dataset reordered = ds;
  for (std::size_t j = 0; j < L; ++j) {
    reordered.label_names[j] = ds.label_names[order[j]];
    for (std::size_t r = 0; r < ds.n_instances(); ++r) reordered.labels(r, j) = ds.labels(r, order[j]);
  }
  const auto third = train_model(cfg, reordered);
  for (std::size_t r = 0; r < ds.n_instances(); ++r) {
    const auto a = base.predict_proba(ds.features.row(r));
    const auto b = third.predict_proba(ds.features.row(r));
    for (std::size_t j = 0; j < L; ++j) diffs += a[order[j]] != b[j];
  }
  std::ostringstream d;
  d << source << ": label outputs compared bit-for-bit after reordering and shuffling other "
    << "label columns; " << diffs << " differences";
  report(diffs == 0, "br_independence", d.str());
}

void protocol_check() {
  const auto [ds, source] = foodtruck_or_standin();
  const auto dir = testing::temp_dir("acceptance_tune");
  testing::write_file(dir / "data.arff", testing::to_arff(ds));
  cli::RunConfig c;
  c.data = (dir / "data.arff").string();
  c.labels = std::to_string(ds.n_labels());
  c.algo = "mlknn";
  c.seed = 2020;
  c.grid = "k=1..20";
  c.reps = 2;
  c.folds = 5;
  std::ostringstream log;
  c.out = (dir / "a").string();
  const auto a = cli::cmd_tune(c, log);
  c.out = (dir / "b").string();
  const auto b = cli::cmd_tune(c, log);
  const bool same = testing::read_file(a.report_path) == testing::read_file(b.report_path);
  std::ostringstream d;
  d << source << ": " << a.report.results.size() << " grid points, " << a.cycles
    << " fit/evaluate cycles, reports identical: " << (same ? "yes" : "no");
  report(a.cycles == 200 && a.report.results.size() == 20 && b.cycles == 200 && same,
         "protocol_check", d.str());
}

std::map<std::string, std::string> run_pipeline(const fs::path& dir, const Dataset& ds) {
  testing::write_file(dir / "data.arff", testing::to_arff(ds));
  cli::RunConfig c;
  c.data = (dir / "data.arff").string();
  c.labels = std::to_string(ds.n_labels());
  c.preset = "paper-cc";
  c.seed = 9;
  c.n_trees = 20;
  c.out = (dir / "out").string();
  c.background = 15;
  c.budget = "200";
  c.instances = "0:8";
  std::ostringstream log;
  c.model = cli::cmd_train(c, log).model_path.string();
  const auto ex = cli::cmd_explain(c, log);
  cli::RunConfig p;
  p.out = (dir / "out" / "plots").string();
  p.model = c.model;
  for (const auto& f : ex.files) p.inputs.push_back(f.string());
  p.kind = "importance";
  cli::cmd_plot(p, log);
  p.kind = "summary";
  p.plot_label = 2;
  p.out = (dir / "out" / "plots_summary").string();
  cli::cmd_plot(p, log);
  p.kind = "force";
  p.inputs = {ex.files[5].string()};
  p.out = (dir / "out" / "plots_force").string();
  cli::cmd_plot(p, log);
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir / "out")) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), dir / "out").string()] = testing::read_file(e.path());
    }
  }
  return files;
}

void emitter_determinism() {
  const Dataset ds = testing::synthetic_dataset(80, 6, 4, 8, "emit");
  const auto a = run_pipeline(testing::temp_dir("acceptance_emit_a"), ds);
  const auto b = run_pipeline(testing::temp_dir("acceptance_emit_b"), ds);
  std::size_t svg = 0, json = 0;
  for (const auto& [name, text] : a) {
    svg += name.ends_with(".svg");
    json += name.ends_with(".json");
  }
  std::ostringstream d;
  d << a.size() << " files (" << svg << " svg, " << json
    << " json) from train/explain/plot, byte-identical across two runs: "
    << (a == b ? "yes" : "no");
  report(a == b && svg == 3 && !a.empty(), "emitter_determinism", d.str());
}

template <typename Fn>
void guarded(const char* name, Fn fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(false, name, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded("oracle_equivalence", oracle_equivalence);
  guarded("local_accuracy", local_accuracy);
  guarded("axiom_suite", axiom_suite);
  guarded("linear_closed_form", linear_closed_form);
  guarded("mlknn_oracle", mlknn_oracle);
  guarded("br_independence", br_independence);
  guarded("protocol_check", protocol_check);
  guarded("emitter_determinism", emitter_determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
