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

// Shared fixtures for the test suites.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mlshap/common.hpp"
#include "mlshap/data.hpp"

namespace mlshap::testing {

// Uniform features in [0, 1); each label thresholds a noisy nonlinear
// combination of a few features, so labels are learnable but not trivial.
inline Dataset synthetic_dataset(std::size_t n, std::size_t d, std::size_t n_labels,
                                 std::uint64_t seed, std::string name = "synthetic") {
  Rng rng(seed);
  Dataset ds;
  ds.name = std::move(name);
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  for (std::size_t l = 0; l < n_labels; ++l) {
    ds.label_names.push_back("y" + std::to_string(l));
  }
  ds.features = Matrix(n, d);
  ds.labels = LabelMatrix(n, n_labels);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rng.uniform();
    for (std::size_t l = 0; l < n_labels; ++l) {
      const double a = ds.features(i, l % d);
      const double b = ds.features(i, (3 * l + 1) % d);
      const double c = ds.features(i, (5 * l + 2) % d);
      const double z = a + 0.6 * std::sin(6.0 * b) * c + 0.2 * (rng.uniform() - 0.5);
      ds.labels(i, l) = z > 0.55 ? 1 : 0;
    }
  }
  return ds;
}

inline std::string to_arff(const Dataset& ds) {
  std::string out = "% generated\n@relation " + ds.name + "\n\n";
  for (const auto& f : ds.feature_names) out += "@attribute " + f + " numeric\n";
  for (const auto& l : ds.label_names) out += "@attribute " + l + " {0,1}\n";
  out += "\n@data\n";
  for (std::size_t r = 0; r < ds.n_instances(); ++r) {
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
      if (j) out += ',';
      out += format_double(ds.features(r, j));
    }
    for (std::size_t l = 0; l < ds.n_labels(); ++l) out += ds.labels(r, l) ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  return mlshap::detail::read_file(p);
}

// Fresh directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mlshap_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace mlshap::testing
