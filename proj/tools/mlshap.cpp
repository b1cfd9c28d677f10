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

// mlshap command-line front end.
//
//   mlshap train   --data D --labels L (--preset P | --algo A) --seed S --out DIR
//   mlshap tune    ... --grid "k=1..20" [--reps 2 --folds 5 --scoring hamming_loss]
//   mlshap explain ... --model M --instances 550 --explain-labels 1,2,12,13
//   mlshap plot    --kind importance|summary|force FILE... --out DIR
//
// Every flag may also come from a JSON document given with --config; flags on
// the command line take precedence.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mlshap/cli.hpp"

namespace {

using mlshap::cli::RunConfig;

struct Flags {
  std::string config, data, format, labels, algo, preset, estimator, budget, out, grid,
      scoring, model, instances, explain_labels, kind;
  std::uint64_t seed = 0;
  std::size_t background = 0, n_trees = 0, max_depth = 0, min_samples_leaf = 0,
              max_features = 0, k = 0, reps = 0, folds = 0, plot_label = 0;
  double s = 0;
  std::vector<std::string> inputs;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label classifiers with Shapley-value explanations"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  auto* o_config = app.add_option("--config", f.config, "JSON run configuration");
  auto* o_data = app.add_option("--data", f.data, "dataset file");
  auto* o_format = app.add_option("--format", f.format, "arff|csv (default: extension)");
  auto* o_labels = app.add_option("--labels", f.labels,
                                  "label columns: trailing count, first:N, or names a,b,c");
  auto* o_algo = app.add_option("--algo", f.algo, "br|cc|mlknn");
  auto* o_preset = app.add_option("--preset", f.preset, "paper-br|paper-cc|paper-mlknn");
  auto* o_seed = app.add_option("--seed", f.seed, "random seed (required)");
  auto* o_estimator = app.add_option("--estimator", f.estimator, "exact|kernel");
  auto* o_budget = app.add_option("--budget", f.budget, "coalition budget: N or full");
  auto* o_background = app.add_option("--background", f.background, "background rows");
  auto* o_out = app.add_option("--out", f.out, "output directory");
  auto* o_n_trees = app.add_option("--n-trees", f.n_trees, "trees per forest");
  auto* o_max_depth = app.add_option("--max-depth", f.max_depth, "tree depth limit");
  auto* o_min_leaf = app.add_option("--min-samples-leaf", f.min_samples_leaf,
                                    "minimum rows per leaf");
  auto* o_max_features = app.add_option("--max-features", f.max_features,
                                        "features scored per split (default sqrt)");
  auto* o_k = app.add_option("--k", f.k, "MLKNN neighbours");
  auto* o_s = app.add_option("--s", f.s, "MLKNN smoothing");
  auto* o_grid = app.add_option("--grid", f.grid, "tune grid, e.g. k=1..20");
  auto* o_reps = app.add_option("--reps", f.reps, "cross-validation repetitions");
  auto* o_folds = app.add_option("--folds", f.folds, "folds per repetition");
  auto* o_scoring = app.add_option("--scoring", f.scoring,
                                   "hamming_loss|subset_accuracy|micro_f1");
  auto* o_model = app.add_option("--model", f.model, "model file");
  auto* o_instances = app.add_option("--instances", f.instances,
                                     "instance selector: 550, 0,3,9, 0:100 or all");
  auto* o_explain_labels = app.add_option("--explain-labels", f.explain_labels,
                                          "label indices to explain, or all");
  auto* o_kind = app.add_option("--kind", f.kind, "importance|summary|force");
  auto* o_plot_label = app.add_option("--plot-label", f.plot_label, "label for summary plots");

  app.add_subcommand("train", "fit a model and write model.json");
  app.add_subcommand("tune", "repeated k-fold grid search");
  app.add_subcommand("explain", "Shapley explanations for selected instances and labels");
  auto* plot = app.add_subcommand("plot", "render importance, summary or force views");
  plot->add_option("inputs", f.inputs, "explanation JSON files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? mlshap::cli::kExitOk : mlshap::cli::kExitUsage;
  }

  try {
    RunConfig c;
    if (o_config->count()) c = mlshap::cli::load_config_file(f.config);
    if (o_data->count()) c.data = f.data;
    if (o_format->count()) c.format = f.format;
    if (o_labels->count()) c.labels = f.labels;
    if (o_algo->count()) c.algo = f.algo;
    if (o_preset->count()) c.preset = f.preset;
    if (o_seed->count()) c.seed = f.seed;
    if (o_estimator->count()) c.estimator = f.estimator;
    if (o_budget->count()) c.budget = f.budget;
    if (o_background->count()) c.background = f.background;
    if (o_out->count()) c.out = f.out;
    if (o_n_trees->count()) c.n_trees = f.n_trees;
    if (o_max_depth->count()) c.max_depth = f.max_depth;
    if (o_min_leaf->count()) c.min_samples_leaf = f.min_samples_leaf;
    if (o_max_features->count()) c.max_features = f.max_features;
    if (o_k->count()) c.k = f.k;
    if (o_s->count()) c.s = f.s;
    if (o_grid->count()) c.grid = f.grid;
    if (o_reps->count()) c.reps = f.reps;
    if (o_folds->count()) c.folds = f.folds;
    if (o_scoring->count()) c.scoring = f.scoring;
    if (o_model->count()) c.model = f.model;
    if (o_instances->count()) c.instances = f.instances;
    if (o_explain_labels->count()) c.explain_labels = f.explain_labels;
    if (o_kind->count()) c.kind = f.kind;
    if (o_plot_label->count()) c.plot_label = f.plot_label;
    if (!f.inputs.empty()) c.inputs = f.inputs;

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "train") {
      mlshap::cli::cmd_train(c, std::cout);
    } else if (command == "tune") {
      mlshap::cli::cmd_tune(c, std::cout);
    } else if (command == "explain") {
      mlshap::cli::cmd_explain(c, std::cout);
    } else {
      mlshap::cli::cmd_plot(c, std::cout);
    }
    return mlshap::cli::kExitOk;
  } catch (const mlshap::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return mlshap::cli::kExitUsage;
  } catch (const mlshap::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mlshap::cli::kExitUsage;
  } catch (const mlshap::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mlshap::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mlshap::cli::kExitRuntime;
  }
}
