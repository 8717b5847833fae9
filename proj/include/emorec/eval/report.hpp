// Copyright (c) 2026 The emorec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Report rendering: a fixed-width text table, a JSON record and SVG plots
// (per-fold bars, confusion heatmaps).

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/eval/cv.hpp"
#include "json.hpp"

namespace emorec::eval {

inline const char* kMacroRecallColumn = "macro_recall (WA)";
inline const char* kOverallAccuracyColumn = "overall_accuracy (UA)";

namespace detail {

inline std::string fixed(double v, int decimals = 1) {
  char b[32];
  std::snprintf(b, sizeof(b), "%.*f", decimals, v);
  return b;
}

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline void write_text(const std::filesystem::path& path, const std::string& s) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << s;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

inline std::string render_table(const MetricsReport& r) {
  std::ostringstream o;
  const std::size_t w1 = std::string(kMacroRecallColumn).size() + 2;
  const std::size_t w2 = std::string(kOverallAccuracyColumn).size() + 2;
  o << "task: " << r.task << "\n";
  o << detail::pad("fold", 8) << detail::pad(kMacroRecallColumn, w1) << detail::pad(kOverallAccuracyColumn, w2)
    << detail::pad("n_test", 9) << "\n";
  for (const auto& f : r.folds) {
    o << detail::pad(std::to_string(f.fold_id), 8);
    if (f.failed) {
      o << "  FAILED: " << f.error << "\n";
      continue;
    }
    o << detail::pad(detail::fixed(f.macro_recall), w1) << detail::pad(detail::fixed(f.overall_accuracy), w2)
      << detail::pad(std::to_string(f.n_test), 9) << "\n";
  }
  if (r.macro_recall && r.overall_accuracy) {
    o << detail::pad("avg", 8) << detail::pad(format_mean_std(*r.macro_recall), w1 + 1)
      << detail::pad(format_mean_std(*r.overall_accuracy), w2 + 1) << "\n";
  } else {
    o << "aggregate omitted: at least one fold failed\n";
  }
  return o.str();
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["task"] = r.task;
  j["class_names"] = r.class_names;
  j["columns"] = {{"macro_recall", kMacroRecallColumn}, {"overall_accuracy", kOverallAccuracyColumn}};
  j["per_fold"] = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json x{{"fold_id", f.fold_id}, {"failed", f.failed}, {"n_train", f.n_train},
                     {"n_test", f.n_test}, {"n_fitted", f.n_fitted}};
    if (f.failed) {
      x["error"] = f.error;
    } else {
      x["macro_recall"] = f.macro_recall;
      x["overall_accuracy"] = f.overall_accuracy;
      if (f.confusion.total() > 0) x["confusion"] = f.confusion.rows();
    }
    j["per_fold"].push_back(std::move(x));
  }
  if (r.macro_recall && r.overall_accuracy) {
    j["aggregate"] = {{"macro_recall", {{"mean", r.macro_recall->mean}, {"std", r.macro_recall->std}}},
                      {"overall_accuracy", {{"mean", r.overall_accuracy->mean}, {"std", r.overall_accuracy->std}}}};
  } else {
    j["aggregate"] = nullptr;
  }
  j["info"] = r.info;
  return j;
}

// Grouped bars: both metrics per fold, 0..100 scale.
inline std::string svg_fold_bars(const MetricsReport& r, const std::string& title) {
  const int W = 640, H = 360, left = 50, bottom = 40, top = 40;
  const int plot_h = H - top - bottom;
  const int n = std::max<int>(1, static_cast<int>(r.folds.size()));
  const double group = static_cast<double>(W - left - 20) / n;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::xml_escape(title) << "</text>\n";
  for (int v = 0; v <= 100; v += 25) {
    const double y = top + plot_h * (1.0 - v / 100.0);
    o << "<line x1=\"" << left << "\" x2=\"" << W - 20 << "\" y1=\"" << y << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
  }
  const char* colors[2] = {"#4c72b0", "#dd8452"};
  for (int i = 0; i < static_cast<int>(r.folds.size()); ++i) {
    const auto& f = r.folds[static_cast<std::size_t>(i)];
    const double x0 = left + i * group + group * 0.15;
    const double bw = group * 0.35;
    const double vals[2] = {f.failed ? 0.0 : f.macro_recall, f.failed ? 0.0 : f.overall_accuracy};
    for (int k = 0; k < 2; ++k) {
      const double h = plot_h * vals[k] / 100.0;
      o << "<rect x=\"" << x0 + k * bw << "\" y=\"" << top + plot_h - h << "\" width=\"" << bw - 2
        << "\" height=\"" << h << "\" fill=\"" << colors[k] << "\"/>\n";
    }
    o << "<text x=\"" << x0 + bw << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
      << (f.failed ? "fold " + std::to_string(f.fold_id) + " (failed)" : "fold " + std::to_string(f.fold_id))
      << "</text>\n";
  }
  o << "<rect x=\"" << W - 250 << "\" y=\"" << H - 18 << "\" width=\"10\" height=\"10\" fill=\"" << colors[0]
    << "\"/><text x=\"" << W - 236 << "\" y=\"" << H - 9 << "\">macro recall</text>\n";
  o << "<rect x=\"" << W - 140 << "\" y=\"" << H - 18 << "\" width=\"10\" height=\"10\" fill=\"" << colors[1]
    << "\"/><text x=\"" << W - 126 << "\" y=\"" << H - 9 << "\">overall accuracy</text>\n";
  o << "</svg>\n";
  return o.str();
}

// Row-normalized confusion heatmap with raw counts in the cells.
inline std::string svg_confusion(const ConfusionMatrix& c, const std::vector<std::string>& names,
                                 const std::string& title) {
  const int n = c.n_classes();
  const int cell = std::max(24, 320 / n), left = 90, top = 50;
  const int W = left + n * cell + 20, H = top + n * cell + 50;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::xml_escape(title) << "</text>\n";
  auto name = [&](int k) {
    return k < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(k)] : std::to_string(k);
  };
  for (int i = 0; i < n; ++i) {
    const double row = static_cast<double>(std::max<std::int64_t>(1, c.row_total(i)));
    o << "<text x=\"" << left - 6 << "\" y=\"" << top + i * cell + cell / 2 + 4 << "\" text-anchor=\"end\">"
      << detail::xml_escape(name(i)) << "</text>\n";
    for (int j = 0; j < n; ++j) {
      const double v = static_cast<double>(c.at(i, j)) / row;
      const int shade = static_cast<int>(255 - 200 * v);
      o << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"white\"/>\n";
      o << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top + i * cell + cell / 2 + 4
        << "\" text-anchor=\"middle\">" << c.at(i, j) << "</text>\n";
    }
  }
  for (int j = 0; j < n; ++j)
    o << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top + n * cell + 16
      << "\" text-anchor=\"middle\">" << detail::xml_escape(name(j)) << "</text>\n";
  o << "<text x=\"" << left + n * cell / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\">predicted</text>\n";
  o << "</svg>\n";
  return o.str();
}

// Writes <stem>.txt, <stem>.json, <stem>_folds.svg and one confusion
// heatmap per evaluated fold.
inline std::vector<std::filesystem::path> write_report(const MetricsReport& r, const std::filesystem::path& dir,
                                                       const std::string& stem) {
  std::vector<std::filesystem::path> out;
  auto put = [&](const std::string& name, const std::string& body) {
    detail::write_text(dir / name, body);
    out.push_back(dir / name);
  };
  put(stem + ".txt", render_table(r));
  put(stem + ".json", to_json(r).dump(2) + "\n");
  put(stem + "_folds.svg", svg_fold_bars(r, r.task + " per fold"));
  for (const auto& f : r.folds)
    if (!f.failed && f.confusion.total() > 0)
      put(stem + "_confusion_fold" + std::to_string(f.fold_id) + ".svg",
          svg_confusion(f.confusion, r.class_names, r.task + " fold " + std::to_string(f.fold_id)));
  return out;
}

}  // namespace emorec::eval
