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

// Multi-label tabular datasets: ARFF/CSV loading, row subsets and
// repeated k-fold plans.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "mlshap/common.hpp"

namespace mlshap {

struct Dataset {
  std::string name;
  Matrix features;
  std::vector<std::string> feature_names;
  LabelMatrix labels;
  std::vector<std::string> label_names;

  std::size_t n_instances() const { return features.rows(); }
  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_labels() const { return label_names.size(); }

  std::vector<std::uint8_t> label_column(std::size_t l) const {
    return labels.column(l);
  }

  // Throws InvalidArgument when any dataset invariant is violated.
  void validate() const {
    if (features.cols() != feature_names.size() && features.rows() > 0) {
      throw InvalidArgument("dataset: feature width does not match names");
    }
    if (labels.cols() != label_names.size() && labels.rows() > 0) {
      throw InvalidArgument("dataset: label width does not match names");
    }
    if (features.rows() != labels.rows()) {
      throw InvalidArgument("dataset: feature and label row counts differ");
    }
    auto check_unique = [](const std::vector<std::string>& names,
                           const char* what) {
      std::unordered_set<std::string> seen;
      for (const auto& n : names) {
        if (!seen.insert(n).second) {
          throw InvalidArgument(std::string("dataset: duplicate ") + what +
                                " name '" + n + "'");
        }
      }
    };
    check_unique(feature_names, "feature");
    check_unique(label_names, "label");
    for (std::uint8_t v : labels.data()) {
      if (v > 1) throw InvalidArgument("dataset: label not binary");
    }
    for (double v : features.data()) {
      if (std::isnan(v)) throw InvalidArgument("dataset: NaN feature value");
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Which attributes of a file are labels.
class LabelSpec {
 public:
  static LabelSpec trailing(std::size_t count) {
    return LabelSpec(Positional{count, false});
  }
  static LabelSpec leading(std::size_t count) {
    return LabelSpec(Positional{count, true});
  }
  static LabelSpec named(std::vector<std::string> names) {
    return LabelSpec(std::move(names));
  }

  // "14" -> trailing 14, "first:14" -> leading 14, "a,b" -> named.
  static LabelSpec parse(std::string_view text) {
    auto count = [](std::string_view s) -> std::optional<std::size_t> {
      if (s.empty()) return std::nullopt;
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
      return v;
    };
    if (auto n = count(text)) return trailing(*n);
    if (text.starts_with("first:")) {
      if (auto n = count(text.substr(6))) return leading(*n);
    }
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find(',', start);
      if (end == std::string_view::npos) end = text.size();
      if (end > start) names.emplace_back(text.substr(start, end - start));
      start = end + 1;
    }
    if (names.empty()) throw ParseError("empty label specification");
    return named(std::move(names));
  }

  // Returns label flags per attribute, label order as it should appear in the
  // dataset (file order for positional specs, listed order for named specs).
  std::vector<std::size_t> resolve(
      const std::vector<std::string>& attribute_names) const {
    const std::size_t n = attribute_names.size();
    std::vector<std::size_t> out;
    if (const auto* p = std::get_if<Positional>(&spec_)) {
      if (p->count == 0 || p->count >= n) {
        throw ParseError("label specification must select at least 1 and "
                         "fewer than all " + std::to_string(n) + " attributes");
      }
      const std::size_t first = p->leading ? 0 : n - p->count;
      for (std::size_t i = 0; i < p->count; ++i) out.push_back(first + i);
      return out;
    }
    const auto& names = std::get<std::vector<std::string>>(spec_);
    for (const auto& name : names) {
      auto it = std::find(attribute_names.begin(), attribute_names.end(), name);
      if (it == attribute_names.end()) {
        throw ParseError("label column '" + name + "' not found");
      }
      const auto idx = static_cast<std::size_t>(it - attribute_names.begin());
      if (std::find(out.begin(), out.end(), idx) != out.end()) {
        throw ParseError("label column '" + name + "' listed twice");
      }
      out.push_back(idx);
    }
    if (out.empty() || out.size() >= n) {
      throw ParseError("label specification must select at least 1 and "
                       "fewer than all attributes");
    }
    return out;
  }

 private:
  struct Positional {
    std::size_t count;
    bool leading;
  };
  explicit LabelSpec(std::variant<Positional, std::vector<std::string>> spec)
      : spec_(std::move(spec)) {}
  std::variant<Positional, std::vector<std::string>> spec_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') &&
      s.back() == s.front()) {
    return std::string(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

// Splits on commas outside single/double quotes.
inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      if (c == quote) quote = 0;
      current.push_back(c);
    } else if (c == '\'' || c == '"') {
      quote = c;
      current.push_back(c);
    } else if (c == ',') {
      fields.push_back(unquote(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(unquote(current));
  return fields;
}

inline bool is_missing(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "?";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string at_line(const std::string& what, std::size_t line) {
  return what + " (line " + std::to_string(line) + ")";
}

// Replaces NaN cells with the column mean over observed entries. A column
// with no observed entries is filled with 0.
inline void impute_column_means(Matrix& m) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (!std::isnan(m(r, c))) {
        sum += m(r, c);
        ++seen;
      }
    }
    const double mean = seen ? sum / static_cast<double>(seen) : 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (std::isnan(m(r, c))) m(r, c) = mean;
    }
  }
}

inline std::uint8_t parse_label_cell(std::string_view cell, std::size_t line,
                                     const std::string& column) {
  if (is_missing(cell)) {
    throw ParseError(at_line("missing value in label '" + column + "'", line));
  }
  auto v = parse_double(cell);
  if (!v || (*v != 0.0 && *v != 1.0)) {
    throw ParseError(at_line("label not binary: '" + std::string(trim(cell)) +
                                 "' in label '" + column + "'",
                             line));
  }
  return *v == 1.0 ? 1 : 0;
}

// Assembles a dataset from per-row string cells.
inline Dataset assemble(std::string name,
                        const std::vector<std::string>& columns,
                        const std::vector<std::size_t>& label_columns,
                        const std::vector<std::vector<std::string>>& rows,
                        const std::vector<std::size_t>& row_lines) {
  std::vector<bool> is_label(columns.size(), false);
  for (std::size_t c : label_columns) is_label[c] = true;

  Dataset ds;
  ds.name = std::move(name);
  std::vector<std::size_t> feature_columns;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (!is_label[c]) {
      feature_columns.push_back(c);
      ds.feature_names.push_back(columns[c]);
    }
  }
  for (std::size_t c : label_columns) ds.label_names.push_back(columns[c]);

  ds.features = Matrix(rows.size(), feature_columns.size());
  ds.labels = LabelMatrix(rows.size(), label_columns.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    for (std::size_t j = 0; j < feature_columns.size(); ++j) {
      const auto& cell = cells[feature_columns[j]];
      if (is_missing(cell)) {
        ds.features(r, j) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      auto v = parse_double(cell);
      if (!v || std::isnan(*v)) {
        throw ParseError(at_line("non-numeric value '" + cell +
                                     "' in feature '" + columns[feature_columns[j]] + "'",
                                 row_lines[r]));
      }
      ds.features(r, j) = *v;
    }
    for (std::size_t j = 0; j < label_columns.size(); ++j) {
      ds.labels(r, j) = parse_label_cell(cells[label_columns[j]], row_lines[r],
                                         columns[label_columns[j]]);
    }
  }
  impute_column_means(ds.features);
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return ds;
}

}  // namespace detail

// Parses the dense ARFF subset: @relation, @attribute <name> numeric|real|
// integer|{v,...}, @data with comma-separated rows. '%' starts a comment and
// '?' marks a missing value.
inline Dataset parse_arff(std::string_view text, const LabelSpec& label_spec) {
  using detail::at_line;
  std::string relation;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> nominal_values;  // empty => numeric
  std::vector<std::size_t> attribute_lines;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  bool in_data = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '%') continue;

    if (in_data) {
      if (line.front() == '{') {
        throw ParseError(at_line("sparse ARFF rows are not supported", line_no));
      }
      auto cells = detail::split_fields(line);
      if (cells.size() != names.size()) {
        throw ParseError(at_line("row has " + std::to_string(cells.size()) +
                                     " values, expected " +
                                     std::to_string(names.size()),
                                 line_no));
      }
      rows.push_back(std::move(cells));
      row_lines.push_back(line_no);
      continue;
    }

    if (line.front() != '@') {
      throw ParseError(at_line("unexpected content before @data", line_no));
    }
    const std::size_t ws = line.find_first_of(" \t");
    const std::string keyword = detail::to_lower(line.substr(0, ws));
    std::string_view rest =
        ws == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(ws));
    if (keyword == "@relation") {
      relation = detail::unquote(rest);
    } else if (keyword == "@attribute") {
      if (rest.empty()) throw ParseError(at_line("malformed @attribute", line_no));
      std::string name;
      std::string_view type;
      if (rest.front() == '\'' || rest.front() == '"') {
        const std::size_t close = rest.find(rest.front(), 1);
        if (close == std::string_view::npos) {
          throw ParseError(at_line("unterminated attribute name", line_no));
        }
        name = std::string(rest.substr(1, close - 1));
        type = detail::trim(rest.substr(close + 1));
      } else {
        const std::size_t sep = rest.find_first_of(" \t{");
        if (sep == std::string_view::npos) {
          throw ParseError(at_line("attribute '" + std::string(rest) +
                                       "' has no type",
                                   line_no));
        }
        name = std::string(rest.substr(0, sep));
        type = detail::trim(rest.substr(sep));
      }
      if (type.empty()) {
        throw ParseError(at_line("attribute '" + name + "' has no type", line_no));
      }
      std::vector<std::string> values;
      if (type.front() == '{') {
        if (type.back() != '}') {
          throw ParseError(at_line("malformed nominal type for '" + name + "'", line_no));
        }
        values = detail::split_fields(type.substr(1, type.size() - 2));
        if (values.empty() || (values.size() == 1 && values[0].empty())) {
          throw ParseError(at_line("empty nominal type for '" + name + "'", line_no));
        }
      } else {
        const std::string t = detail::to_lower(type);
        if (t != "numeric" && t != "real" && t != "integer") {
          throw ParseError(at_line("unsupported attribute type '" +
                                       std::string(type) + "' for '" + name + "'",
                                   line_no));
        }
      }
      names.push_back(std::move(name));
      nominal_values.push_back(std::move(values));
      attribute_lines.push_back(line_no);
    } else if (keyword == "@data") {
      if (names.empty()) throw ParseError(at_line("@data before any @attribute", line_no));
      in_data = true;
    } else {
      throw ParseError(at_line("unknown header keyword '" + keyword + "'", line_no));
    }
  }
  if (!in_data) throw ParseError("missing @data section");

  const auto label_columns = label_spec.resolve(names);
  std::vector<bool> is_label(names.size(), false);
  for (std::size_t c : label_columns) is_label[c] = true;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto& values = nominal_values[c];
    if (values.empty()) continue;
    for (const auto& v : values) {
      const auto parsed = parse_double(v);
      const bool ok = is_label[c] ? (parsed && (*parsed == 0.0 || *parsed == 1.0))
                                  : parsed.has_value();
      if (!ok) {
        throw ParseError(at_line(std::string(is_label[c] ? "label not binary"
                                                         : "non-numeric nominal feature") +
                                     ": attribute '" + names[c] + "'",
                                 attribute_lines[c]));
      }
    }
  }
  return detail::assemble(relation, names, label_columns, rows, row_lines);
}

inline Dataset load_arff(const std::filesystem::path& path,
                         const LabelSpec& label_spec) {
  auto ds = parse_arff(detail::read_file(path), label_spec);
  if (ds.name.empty()) ds.name = path.stem().string();
  return ds;
}

// Header row + comma-separated rows. Empty or '?' feature cells are imputed
// with the column mean.
inline Dataset parse_csv(std::string_view text, const LabelSpec& label_spec,
                         std::string name = {}) {
  using detail::at_line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  if (text.starts_with("\xEF\xBB\xBF")) pos = 3;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_fields(line);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError(at_line("row has " + std::to_string(cells.size()) +
                                   " cells, expected " + std::to_string(header.size()),
                               line_no));
    }
    rows.push_back(std::move(cells));
    row_lines.push_back(line_no);
  }
  if (header.empty()) throw ParseError("missing CSV header row");
  const auto label_columns = label_spec.resolve(header);
  return detail::assemble(std::move(name), header, label_columns, rows, row_lines);
}

inline Dataset parse_csv(std::string_view text,
                         const std::vector<std::string>& label_names,
                         std::string name = {}) {
  return parse_csv(text, LabelSpec::named(label_names), std::move(name));
}

inline Dataset load_csv(const std::filesystem::path& path, const LabelSpec& label_spec) {
  return parse_csv(detail::read_file(path), label_spec, path.stem().string());
}

inline Dataset load_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& label_names) {
  return load_csv(path, LabelSpec::named(label_names));
}

// Features first, then labels. Values use shortest round-trip text so that
// parse_csv reproduces the dataset bit-exactly.
inline std::string to_csv(const Dataset& ds) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"'") == std::string::npos) return s;
    return "\"" + s + "\"";
  };
  std::string out;
  for (std::size_t j = 0; j < ds.n_features(); ++j) {
    if (j) out += ',';
    out += quote(ds.feature_names[j]);
  }
  for (std::size_t l = 0; l < ds.n_labels(); ++l) {
    out += ',';
    out += quote(ds.label_names[l]);
  }
  out += '\n';
  for (std::size_t r = 0; r < ds.n_instances(); ++r) {
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
      if (j) out += ',';
      out += format_double(ds.features(r, j));
    }
    for (std::size_t l = 0; l < ds.n_labels(); ++l) {
      out += ds.labels(r, l) ? ",1" : ",0";
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_csv(ds);
}

// Row subset in the requested order.
inline Dataset split(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.name = ds.name;
  out.feature_names = ds.feature_names;
  out.label_names = ds.label_names;
  std::vector<double> f;
  std::vector<std::uint8_t> y;
  f.reserve(indices.size() * ds.n_features());
  y.reserve(indices.size() * ds.n_labels());
  for (std::size_t i : indices) {
    if (i >= ds.n_instances()) {
      throw InvalidArgument("split: index " + std::to_string(i) +
                            " out of range for " +
                            std::to_string(ds.n_instances()) + " instances");
    }
    auto fr = ds.features.row(i);
    auto yr = ds.labels.row(i);
    f.insert(f.end(), fr.begin(), fr.end());
    y.insert(y.end(), yr.begin(), yr.end());
  }
  out.features = Matrix(indices.size(), ds.n_features(), std::move(f));
  out.labels = LabelMatrix(indices.size(), ds.n_labels(), std::move(y));
  return out;
}

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  friend bool operator==(const FoldSplit&, const FoldSplit&) = default;
};

struct FoldPlan {
  std::size_t repetitions = 0;
  std::size_t folds_per_rep = 0;
  std::uint64_t seed = 0;
  std::size_t n_instances = 0;
  std::vector<std::vector<FoldSplit>> assignments;  // [repetition][fold]

  std::size_t size() const { return repetitions * folds_per_rep; }
  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

// Repeated k-fold plan over a plain random shuffle (no stratification). Fold
// sizes differ by at most one; index lists are sorted ascending.
inline FoldPlan make_folds(std::size_t n_instances, std::size_t repetitions,
                           std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("make_folds: k must be at least 2");
  if (k > n_instances) {
    throw InvalidArgument("make_folds: k=" + std::to_string(k) +
                          " exceeds n_instances=" + std::to_string(n_instances));
  }
  if (repetitions < 1) throw InvalidArgument("make_folds: repetitions must be >= 1");
  FoldPlan plan{repetitions, k, seed, n_instances, {}};
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    Rng rng(derive_seed(seed, rep));
    std::vector<std::size_t> order(n_instances);
    for (std::size_t i = 0; i < n_instances; ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<std::size_t> fold_of(n_instances);
    const std::size_t base = n_instances / k;
    const std::size_t extra = n_instances % k;
    std::size_t cursor = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t size = base + (f < extra ? 1 : 0);
      for (std::size_t i = 0; i < size; ++i) fold_of[order[cursor++]] = f;
    }
    std::vector<FoldSplit> folds(k);
    for (std::size_t i = 0; i < n_instances; ++i) {
      for (std::size_t f = 0; f < k; ++f) {
        (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
      }
    }
    plan.assignments.push_back(std::move(folds));
  }
  return plan;
}

}  // namespace mlshap
