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

// Explanation views: global feature importance (stacked per label),
// per-label summary (beeswarm) points and single-prediction force
// decompositions, with JSON and SVG emitters.
//
// Emitters are pure: the same PlotSpec always yields the same bytes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlshap/common.hpp"
#include "mlshap/shap.hpp"

namespace mlshap {

struct ImportanceRow {
  std::size_t feature = 0;
  std::string name;
  std::vector<double> per_label;  // aligned with ImportanceTable::labels
  double total = 0.0;
  friend bool operator==(const ImportanceRow&, const ImportanceRow&) = default;
};

struct ImportanceTable {
  std::vector<std::size_t> labels;
  std::vector<std::string> label_names;  // optional, aligned with labels
  std::vector<ImportanceRow> rows;       // decreasing total
  friend bool operator==(const ImportanceTable&, const ImportanceTable&) = default;
};

struct SummaryPoint {
  std::size_t feature = 0;
  std::size_t instance = 0;
  double shap = 0.0;
  double color = 0.0;   // feature value min-max normalised over the explained set
  double jitter = 0.0;  // vertical offset within the feature row, |jitter| <= 0.4
  friend bool operator==(const SummaryPoint&, const SummaryPoint&) = default;
};

struct SummaryPoints {
  std::size_t label = 0;
  std::vector<std::size_t> row_order;  // features by decreasing mean |phi|
  std::vector<std::string> feature_names;
  std::vector<SummaryPoint> points;
  friend bool operator==(const SummaryPoints&, const SummaryPoints&) = default;
};

struct Force {
  std::size_t feature = 0;
  std::string name;
  double value = 0.0;
  double shap = 0.0;
  friend bool operator==(const Force&, const Force&) = default;
};

struct ForceData {
  std::size_t instance = 0;
  std::size_t label = 0;
  double base_value = 0.0;
  double fx = 0.0;
  std::vector<Force> up;    // shap > 0, descending
  std::vector<Force> down;  // shap < 0, ascending
  friend bool operator==(const ForceData&, const ForceData&) = default;
};

enum class PlotKind { kImportance, kSummary, kForce };

inline std::string plot_kind_name(PlotKind k) {
  switch (k) {
    case PlotKind::kImportance: return "importance";
    case PlotKind::kSummary: return "summary";
    case PlotKind::kForce: return "force";
  }
  return "unknown";
}

inline PlotKind parse_plot_kind(std::string_view name) {
  if (name == "importance") return PlotKind::kImportance;
  if (name == "summary") return PlotKind::kSummary;
  if (name == "force") return PlotKind::kForce;
  throw ParseError("unknown plot kind '" + std::string(name) +
                   "' (expected importance, summary or force)");
}

struct PlotSpec {
  std::variant<ImportanceTable, SummaryPoints, ForceData> payload;
  std::string title;
  int width = 800;
  int height = 0;  // 0 => derived from the payload

  PlotKind kind() const { return static_cast<PlotKind>(payload.index()); }
  friend bool operator==(const PlotSpec&, const PlotSpec&) = default;
};

// Mean |phi| per (feature, label) over instances. Values are summed in sorted
// order so the table does not depend on the order of the input.
inline ImportanceTable feature_importance(std::span<const Explanation> explanations) {
  if (explanations.empty()) throw InvalidArgument("feature_importance: no explanations");
  const std::size_t m = explanations.front().phi.size();
  std::set<std::size_t> label_set;
  for (const auto& e : explanations) {
    if (e.phi.size() != m) {
      throw InvalidArgument("feature_importance: explanations differ in width");
    }
    label_set.insert(e.label);
  }
  ImportanceTable table;
  table.labels.assign(label_set.begin(), label_set.end());
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < table.labels.size(); ++i) slot[table.labels[i]] = i;

  // magnitudes[label slot][feature] -> |phi| values
  std::vector<std::vector<std::vector<double>>> magnitudes(
      table.labels.size(), std::vector<std::vector<double>>(m));
  for (const auto& e : explanations) {
    for (std::size_t f = 0; f < m; ++f) {
      magnitudes[slot[e.label]][f].push_back(std::abs(e.phi[f]));
    }
  }
  const auto& names = explanations.front().feature_names;
  for (std::size_t f = 0; f < m; ++f) {
    ImportanceRow row;
    row.feature = f;
    row.name = f < names.size() ? names[f] : "f" + std::to_string(f);
    for (std::size_t l = 0; l < table.labels.size(); ++l) {
      auto& v = magnitudes[l][f];
      std::sort(v.begin(), v.end());
      double sum = 0.0;
      for (double x : v) sum += x;
      const double mean = sum / static_cast<double>(v.size());
      row.per_label.push_back(mean);
      row.total += mean;
    }
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) {
                     return a.total > b.total;
                   });
  return table;
}

namespace detail {

// Rows ordered by decreasing mean |phi|, ties by feature index.
inline std::vector<std::size_t> order_by_mean_abs(std::span<const Explanation> es) {
  const std::size_t m = es.front().phi.size();
  std::vector<double> mean(m, 0.0);
  for (std::size_t f = 0; f < m; ++f) {
    std::vector<double> v;
    for (const auto& e : es) v.push_back(std::abs(e.phi[f]));
    std::sort(v.begin(), v.end());
    for (double x : v) mean[f] += x;
    mean[f] /= static_cast<double>(v.size());
  }
  std::vector<std::size_t> order(m);
  for (std::size_t f = 0; f < m; ++f) order[f] = f;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
  return order;
}

inline constexpr int kSummaryBins = 40;
inline constexpr double kMaxJitter = 0.4;

}  // namespace detail

// One point per (instance, feature) for a single label. Jitter is derived
// from point density: the shap axis is split into bins and the points of a
// bin are spread alternately above and below the row centre (a lone point
// stays on the centre line).
inline SummaryPoints summary_points(std::span<const Explanation> explanations) {
  if (explanations.empty()) throw InvalidArgument("summary_points: no explanations");
  const std::size_t label = explanations.front().label;
  const std::size_t m = explanations.front().phi.size();
  for (const auto& e : explanations) {
    if (e.label != label) {
      throw InvalidArgument("summary_points: explanations span several labels");
    }
    if (e.phi.size() != m || e.feature_values.size() != m) {
      throw InvalidArgument("summary_points: explanations differ in width");
    }
  }
  SummaryPoints out;
  out.label = label;
  out.row_order = detail::order_by_mean_abs(explanations);
  const auto& names = explanations.front().feature_names;
  for (std::size_t f = 0; f < m; ++f) {
    out.feature_names.push_back(f < names.size() ? names[f] : "f" + std::to_string(f));
  }

  double lo = explanations.front().phi[0];
  double hi = lo;
  for (const auto& e : explanations) {
    for (double p : e.phi) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  const double span = hi - lo;
  auto bin_of = [&](double v) {
    if (span <= 0) return 0;
    return std::min(detail::kSummaryBins - 1,
                    static_cast<int>((v - lo) / span * detail::kSummaryBins));
  };

  for (std::size_t f : out.row_order) {
    double vmin = explanations.front().feature_values[f];
    double vmax = vmin;
    for (const auto& e : explanations) {
      vmin = std::min(vmin, e.feature_values[f]);
      vmax = std::max(vmax, e.feature_values[f]);
    }
    std::map<int, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      bins[bin_of(explanations[i].phi[f])].push_back(i);
    }
    std::size_t widest = 1;
    for (const auto& [b, members] : bins) widest = std::max(widest, members.size());
    const double step =
        widest > 1 ? detail::kMaxJitter / static_cast<double>(widest / 2) : 0.0;

    std::vector<double> jitter(explanations.size(), 0.0);
    for (auto& [b, members] : bins) {
      std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t c) {
        return explanations[a].phi[f] < explanations[c].phi[f];
      });
      for (std::size_t k = 0; k < members.size(); ++k) {
        const double level = static_cast<double>((k + 1) / 2);
        jitter[members[k]] = (k % 2 == 1 ? level : -level) * step;
      }
    }
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      const auto& e = explanations[i];
      SummaryPoint p;
      p.feature = f;
      p.instance = e.instance;
      p.shap = e.phi[f];
      p.color = vmax > vmin ? (e.feature_values[f] - vmin) / (vmax - vmin) : 0.5;
      p.jitter = jitter[i];
      out.points.push_back(p);
    }
  }
  return out;
}

// Splits a prediction into upward (shap > 0, largest first) and downward
// (shap < 0, most negative first) forces. Zero attributions are dropped.
inline ForceData force_data(const Explanation& e) {
  ForceData out;
  out.instance = e.instance;
  out.label = e.label;
  out.base_value = e.base_value;
  out.fx = e.fx;
  for (std::size_t f = 0; f < e.phi.size(); ++f) {
    if (e.phi[f] == 0.0) continue;
    Force force{f, f < e.feature_names.size() ? e.feature_names[f] : "f" + std::to_string(f),
                f < e.feature_values.size() ? e.feature_values[f] : 0.0, e.phi[f]};
    (e.phi[f] > 0 ? out.up : out.down).push_back(std::move(force));
  }
  std::stable_sort(out.up.begin(), out.up.end(),
                   [](const Force& a, const Force& b) { return a.shap > b.shap; });
  std::stable_sort(out.down.begin(), out.down.end(),
                   [](const Force& a, const Force& b) { return a.shap < b.shap; });
  return out;
}

// JSON ----------------------------------------------------------------------

inline constexpr int kPlotFormatVersion = 1;

inline nlohmann::json payload_to_json(const ImportanceTable& t) {
  nlohmann::json j;
  j["labels"] = t.labels;
  j["label_names"] = t.label_names;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"feature", r.feature}, {"name", r.name},
                    {"per_label", r.per_label}, {"total", r.total}});
  }
  return j;
}

inline nlohmann::json payload_to_json(const SummaryPoints& s) {
  nlohmann::json j;
  j["label"] = s.label;
  j["row_order"] = s.row_order;
  j["feature_names"] = s.feature_names;
  auto& pts = j["points"] = nlohmann::json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"feature", p.feature}, {"instance", p.instance}, {"shap", p.shap},
                   {"color", p.color}, {"jitter", p.jitter}});
  }
  return j;
}

inline nlohmann::json payload_to_json(const ForceData& f) {
  auto forces = [](const std::vector<Force>& list) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : list) {
      a.push_back({{"feature", x.feature}, {"name", x.name}, {"value", x.value},
                   {"shap", x.shap}});
    }
    return a;
  };
  return {{"instance", f.instance}, {"label", f.label}, {"base_value", f.base_value},
          {"fx", f.fx}, {"up", forces(f.up)}, {"down", forces(f.down)}};
}

// Keys are emitted in sorted order; numbers use shortest round-trip text.
inline std::string write_json(const PlotSpec& spec) {
  nlohmann::json j;
  j["format"] = "mlshap.plot";
  j["version"] = kPlotFormatVersion;
  j["kind"] = plot_kind_name(spec.kind());
  j["title"] = spec.title;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["payload"] = std::visit([](const auto& p) { return payload_to_json(p); }, spec.payload);
  return j.dump(2) + "\n";
}

inline PlotSpec read_plot_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "mlshap.plot") throw ParseError("not a plot document");
    if (j.at("version").get<int>() != kPlotFormatVersion) {
      throw ParseError("unsupported plot format version");
    }
    PlotSpec spec;
    spec.title = j.at("title").get<std::string>();
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    const auto& p = j.at("payload");
    switch (parse_plot_kind(j.at("kind").get<std::string>())) {
      case PlotKind::kImportance: {
        ImportanceTable t;
        t.labels = p.at("labels").get<std::vector<std::size_t>>();
        t.label_names = p.at("label_names").get<std::vector<std::string>>();
        for (const auto& r : p.at("rows")) {
          t.rows.push_back({r.at("feature").get<std::size_t>(), r.at("name").get<std::string>(),
                            r.at("per_label").get<std::vector<double>>(),
                            r.at("total").get<double>()});
        }
        spec.payload = std::move(t);
        break;
      }
      case PlotKind::kSummary: {
        SummaryPoints s;
        s.label = p.at("label").get<std::size_t>();
        s.row_order = p.at("row_order").get<std::vector<std::size_t>>();
        s.feature_names = p.at("feature_names").get<std::vector<std::string>>();
        for (const auto& q : p.at("points")) {
          s.points.push_back({q.at("feature").get<std::size_t>(),
                              q.at("instance").get<std::size_t>(), q.at("shap").get<double>(),
                              q.at("color").get<double>(), q.at("jitter").get<double>()});
        }
        spec.payload = std::move(s);
        break;
      }
      case PlotKind::kForce: {
        ForceData f;
        f.instance = p.at("instance").get<std::size_t>();
        f.label = p.at("label").get<std::size_t>();
        f.base_value = p.at("base_value").get<double>();
        f.fx = p.at("fx").get<double>();
        for (const char* side : {"up", "down"}) {
          for (const auto& q : p.at(side)) {
            Force x{q.at("feature").get<std::size_t>(), q.at("name").get<std::string>(),
                    q.at("value").get<double>(), q.at("shap").get<double>()};
            (std::string(side) == "up" ? f.up : f.down).push_back(std::move(x));
          }
        }
        spec.payload = std::move(f);
        break;
      }
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plot: ") + e.what());
  }
}

// SVG -----------------------------------------------------------------------

namespace svg {

// Twelve-colour cycle for per-label segments.
inline const char* palette(std::size_t i) {
  static const char* const kColors[12] = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
      "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a"};
  return kColors[i % 12];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

// Tick label text with up to four significant digits.
inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

inline std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Blue (low) to red (high), matching the usual attribution colour scale.
inline std::string value_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(0 + t * 255));
  const int g = static_cast<int>(std::lround(138 - t * 138));
  const int b = static_cast<int>(std::lround(255 - t * (255 - 82)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

class Writer {
 public:
  Writer(int width, int height) : width_(width), height_(height) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
         << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
         << "\" font-family=\"Helvetica, Arial, sans-serif\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
         << "\" fill=\"#ffffff\"/>\n";
  }

  void text(double x, double y, std::string_view s, int size = 12,
            std::string_view anchor = "start", std::string_view fill = "#333333") {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
         << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">" << escape(s)
         << "</text>\n";
  }
  void rect(double x, double y, double w, double h, std::string_view fill) {
    out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
         << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0) {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
         << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << num(width) << "\"/>\n";
  }
  void circle(double cx, double cy, double r, std::string_view fill) {
    out_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
         << "\" fill=\"" << fill << "\" fill-opacity=\"0.8\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, std::string_view fill) {
    out_ << "<polygon points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out_ << ' ';
      out_ << num(pts[i].first) << ',' << num(pts[i].second);
    }
    out_ << "\" fill=\"" << fill << "\" stroke=\"#ffffff\" stroke-width=\"1.00\"/>\n";
  }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
  int width_;
  int height_;
};

inline double nice_step(double range, int ticks) {
  if (range <= 0) return 1.0;
  const double raw = range / ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  const double nice = frac < 1.5 ? 1 : frac < 3 ? 2 : frac < 7 ? 5 : 10;
  return nice * mag;
}

inline void x_axis(Writer& w, double left, double right, double y, double lo, double hi,
                   std::string_view caption) {
  w.line(left, y, right, y, "#333333");
  const double step = nice_step(hi - lo, 5);
  const double first = std::ceil(lo / step - 1e-9) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) {
    const double px = left + (hi > lo ? (t - lo) / (hi - lo) : 0.5) * (right - left);
    w.line(px, y, px, y + 4, "#333333");
    w.text(px, y + 16, tick(std::abs(t) < step * 1e-9 ? 0.0 : t), 10, "middle");
  }
  w.text((left + right) / 2, y + 32, caption, 12, "middle");
}

inline std::string render(const PlotSpec& spec, const ImportanceTable& t) {
  constexpr double kRow = 22, kTop = 50, kLeft = 170, kRight = 170, kBottom = 50;
  const int height = spec.height > 0
                         ? spec.height
                         : static_cast<int>(kTop + kBottom + kRow * static_cast<double>(t.rows.size()));
  Writer w(spec.width, height);
  w.text(spec.width / 2.0, 24, spec.title, 16, "middle");
  double max_total = 0;
  for (const auto& r : t.rows) max_total = std::max(max_total, r.total);
  if (max_total <= 0) max_total = 1;
  const double right = spec.width - kRight;
  const double scale = (right - kLeft) / max_total;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const double y = kTop + kRow * static_cast<double>(i);
    w.text(kLeft - 8, y + kRow * 0.65, r.name, 12, "end");
    double x = kLeft;
    for (std::size_t l = 0; l < r.per_label.size(); ++l) {
      const double wd = r.per_label[l] * scale;
      if (wd > 0) w.rect(x, y + 3, wd, kRow - 6, palette(l));
      x += wd;
    }
  }
  const double axis_y = kTop + kRow * static_cast<double>(t.rows.size()) + 4;
  x_axis(w, kLeft, right, axis_y, 0.0, max_total, "mean(|SHAP value|)");
  for (std::size_t l = 0; l < t.labels.size(); ++l) {
    const double y = kTop + 16.0 * static_cast<double>(l);
    w.rect(right + 20, y, 10, 10, palette(l));
    const std::string name = l < t.label_names.size() && !t.label_names[l].empty()
                                 ? t.label_names[l]
                                 : "label " + std::to_string(t.labels[l]);
    w.text(right + 36, y + 9, name, 11);
  }
  return w.finish();
}

inline std::string render(const PlotSpec& spec, const SummaryPoints& s) {
  constexpr double kRow = 26, kTop = 50, kLeft = 170, kRight = 90, kBottom = 50;
  const std::size_t rows = s.row_order.size();
  const int height = spec.height > 0
                         ? spec.height
                         : static_cast<int>(kTop + kBottom + kRow * static_cast<double>(rows));
  Writer w(spec.width, height);
  w.text(spec.width / 2.0, 24, spec.title, 16, "middle");
  double lo = 0, hi = 0;
  for (const auto& p : s.points) {
    lo = std::min(lo, p.shap);
    hi = std::max(hi, p.shap);
  }
  if (hi <= lo) {
    lo -= 1;
    hi += 1;
  }
  const double pad = (hi - lo) * 0.05;
  lo -= pad;
  hi += pad;
  const double right = spec.width - kRight;
  auto px = [&](double v) { return kLeft + (v - lo) / (hi - lo) * (right - kLeft); };
  std::map<std::size_t, std::size_t> row_of;
  for (std::size_t i = 0; i < rows; ++i) row_of[s.row_order[i]] = i;
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = kTop + kRow * (static_cast<double>(i) + 0.5);
    const std::size_t f = s.row_order[i];
    w.text(kLeft - 8, y + 4, f < s.feature_names.size() ? s.feature_names[f] : "", 12, "end");
    w.line(kLeft, y, right, y, "#eeeeee");
  }
  const double axis_y = kTop + kRow * static_cast<double>(rows) + 4;
  w.line(px(0), kTop, px(0), axis_y, "#999999");
  for (const auto& p : s.points) {
    const double y = kTop + kRow * (static_cast<double>(row_of[p.feature]) + 0.5 + p.jitter);
    w.circle(px(p.shap), y, 3, value_color(p.color));
  }
  x_axis(w, kLeft, right, axis_y, lo, hi, "SHAP value (impact on model output)");
  // Colour bar.
  const double bx = right + 30;
  for (int i = 0; i < 20; ++i) {
    w.rect(bx, kTop + 8.0 * (19 - i), 12, 8, value_color(i / 19.0));
  }
  w.text(bx + 16, kTop + 8, "High", 10);
  w.text(bx + 16, kTop + 160, "Low", 10);
  w.text(bx + 6, kTop + 178, "Feature value", 10, "middle");
  return w.finish();
}

inline std::string render(const PlotSpec& spec, const ForceData& f) {
  const int height = spec.height > 0 ? spec.height : 220;
  Writer w(spec.width, height);
  w.text(spec.width / 2.0, 24, spec.title, 16, "middle");
  double up = 0, down = 0;
  for (const auto& x : f.up) up += x.shap;
  for (const auto& x : f.down) down += x.shap;
  // Upward forces end at fx from the left; downward forces start at fx.
  const double start = f.fx - up;
  const double end = f.fx - down;
  double lo = std::min({f.base_value, f.fx, start, end});
  double hi = std::max({f.base_value, f.fx, start, end});
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = (hi - lo) * 0.08;
  lo -= pad;
  hi += pad;
  constexpr double kLeft = 40, kBar = 110, kBarH = 24;
  const double right = spec.width - 40.0;
  auto px = [&](double v) { return kLeft + (v - lo) / (hi - lo) * (right - kLeft); };

  w.line(kLeft, kBar - 30, right, kBar - 30, "#cccccc");
  auto marker = [&](double v, std::string_view caption, bool bold) {
    const double x = px(v);
    w.line(x, kBar - 38, x, kBar + kBarH + 4, bold ? "#000000" : "#888888", bold ? 2.0 : 1.0);
    w.text(x, kBar - 44, caption, 11, "middle", "#555555");
    w.text(x, kBar - 58, tick(v), 13, "middle", "#000000");
  };
  marker(f.base_value, "base value", false);
  marker(f.fx, "f(x)", true);

  double cursor = start;
  for (auto it = f.up.rbegin(); it != f.up.rend(); ++it) {
    const double a = px(cursor), b = px(cursor + it->shap);
    const double tip = std::min(6.0, (b - a) / 2);
    w.polygon({{a, kBar}, {b - tip, kBar}, {b, kBar + kBarH / 2}, {b - tip, kBar + kBarH},
               {a, kBar + kBarH}, {a + tip, kBar + kBarH / 2}},
              "#ff0052");
    cursor += it->shap;
  }
  cursor = f.fx;
  for (const auto& x : f.down) {
    const double a = px(cursor), b = px(cursor - x.shap);
    const double tip = std::min(6.0, (b - a) / 2);
    w.polygon({{a + tip, kBar}, {b, kBar}, {b - tip, kBar + kBarH / 2}, {b, kBar + kBarH},
               {a + tip, kBar + kBarH}, {a, kBar + kBarH / 2}},
              "#008bfb");
    cursor -= x.shap;
  }
  // Feature captions, strongest forces first.
  double y = kBar + kBarH + 24;
  const std::size_t shown = 5;
  std::string up_caption = "increase:";
  for (std::size_t i = 0; i < f.up.size() && i < shown; ++i) {
    up_caption += " " + f.up[i].name + "=" + tick(f.up[i].value);
  }
  std::string down_caption = "decrease:";
  for (std::size_t i = 0; i < f.down.size() && i < shown; ++i) {
    down_caption += " " + f.down[i].name + "=" + tick(f.down[i].value);
  }
  w.text(kLeft, y, up_caption, 11, "start", "#ff0052");
  w.text(kLeft, y + 18, down_caption, 11, "start", "#008bfb");
  return w.finish();
}

}  // namespace svg

// Standalone SVG 1.1 document.
inline std::string render_svg(const PlotSpec& spec) {
  return std::visit([&](const auto& p) { return svg::render(spec, p); }, spec.payload);
}

}  // namespace mlshap
