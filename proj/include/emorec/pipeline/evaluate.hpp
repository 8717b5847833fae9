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

#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "emorec/eval/report.hpp"
#include "emorec/fusion/prob_file.hpp"
#include "emorec/pipeline/train.hpp"
#include "emorec/ser/inference.hpp"

namespace emorec::pipeline {

inline std::vector<std::string> emotion_class_names() {
  std::vector<std::string> n;
  for (int k = 0; k < kNumEmotions; ++k) n.emplace_back(emotion_name(emotion_from_index(k)));
  return n;
}

inline fs::path eval_dir(const PipelineConfig& c, Task t) { return c.output_dir / "eval" / task_name(t); }
inline fs::path probs_path(const PipelineConfig& c, Task t) { return eval_dir(c, t) / "probs.tsv"; }

struct EvalResult {
  eval::MetricsReport report;
  std::vector<fs::path> files;
};

// Scores every test fold's checkpoint on that fold's test utterances.
// Checkpoints must exist for all folds; missing ones are listed together.
inline EvalResult run_eval(const PipelineConfig& c, Task task, const FeatureSource& src, const Logger& log) {
  const CorpusIndex idx = CorpusIndex::load(c);
  const auto folds = idx.test_folds();
  if (folds.empty()) throw DataError("fold file " + c.folds_path().string() + " has no test folds to evaluate");
  std::vector<std::string> missing;
  for (const auto& f : folds)
    if (!fs::exists(checkpoint_path(c, task, f.fold_id))) missing.push_back(checkpoint_path(c, task, f.fold_id).string());
  if (!missing.empty()) {
    std::string m = "missing " + std::to_string(missing.size()) + " checkpoint(s):";
    for (const auto& p : missing) m += "\n  " + p;
    throw DataError(m);
  }

  using Model = std::variant<ser::LoadedSer, ter::LoadedTer>;
  std::vector<fusion::ProbRecord> probs;
  const char* modality = task == Task::kSer ? "speech" : "text";
  auto train = [&](const FoldSpec& f, const FeatureSource&) -> std::shared_ptr<Model> {
    const auto ck = read_record_file(checkpoint_path(c, task, f.fold_id));
    if (ck.metadata.at("train_ids").get<std::vector<std::string>>() != f.train_ids)
      throw DataError("checkpoint for fold " + std::to_string(f.fold_id) +
                      " was trained on a different utterance set than the fold file lists");
    if (task == Task::kSer) return std::make_shared<Model>(ser::load_ser_checkpoint(ck));
    return std::make_shared<Model>(ter::load_ter_checkpoint(ck));
  };
  auto predict = [&](const std::shared_ptr<Model>& m, const std::vector<std::string>& ids) {
    std::vector<int> out;
    for (const auto& id : ids) {
      EmotionProbs p;
      if (auto* s = std::get_if<ser::LoadedSer>(m.get())) {
        p = ser::infer_utterance(*s->model, *src.speech(id));
      } else {
        const auto& t = std::get<ter::LoadedTer>(*m);
        p = ter::ter_infer(*t.model, *src.text(id), t.config.max_tokens, id, [&](const std::string& w) { log.warn(w); });
      }
      probs.push_back({id, p, modality});
      out.push_back(p.argmax());
    }
    return out;
  };
  EvalResult res;
  res.report = eval::run_cv(
      folds, src, [&](const std::string& id) { return idx.label.at(id); }, kNumEmotions, train, predict,
      std::string(task_name(task)));
  res.report.class_names = emotion_class_names();
  res.report.info["seed"] = c.seed;
  const fs::path dir = eval_dir(c, task);
  res.files = eval::write_report(res.report, dir, task_name(task));
  fusion::write_prob_file(probs_path(c, task), probs);
  res.files.push_back(probs_path(c, task));
  res.files.push_back(write_effective_config(c, dir));
  for (const auto& f : res.report.folds)
    if (f.failed) log.warn(std::string(task_name(task)) + " fold " + std::to_string(f.fold_id) + " failed: " + f.error);
  return res;
}

// Per-fold scores typed in from a table: lines of "<fold> <score>".
inline std::vector<double> read_fold_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fold scores " + path.string());
  std::vector<double> v;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss{std::string(t)};
    std::string fold, score;
    ss >> fold >> score;
    const auto x = parse_double(score);
    if (!x) throw DataError(path.string() + ":" + std::to_string(n) + ": expected '<fold> <score>'");
    v.push_back(*x);
  }
  if (v.empty()) throw DataError(path.string() + " lists no fold scores");
  return v;
}

inline std::string render_fold_scores(const std::vector<double>& v, const std::string& metric) {
  std::string s = "fold";
  for (std::size_t i = 0; i < v.size(); ++i) s += "\t" + std::to_string(i + 1);
  s += "\tmean ± std\n" + metric;
  for (double x : v) s += "\t" + eval::detail::fixed(x);
  return s + "\t" + eval::format_mean_std(eval::mean_std(v)) + "\n";
}

namespace detail {

inline std::map<std::string, fusion::ProbRecord> by_id(const std::vector<fusion::ProbRecord>& v) {
  std::map<std::string, fusion::ProbRecord> m;
  for (const auto& r : v) m[r.utterance_id] = r;
  return m;
}

// Fold metrics from stored decisions.
inline eval::MetricsReport report_from_decisions(const std::vector<FoldSpec>& folds,
                                                 const std::map<std::string, int>& decision,
                                                 const CorpusIndex& idx, std::string task) {
  eval::MetricsReport r;
  r.task = std::move(task);
  r.class_names = emotion_class_names();
  for (const auto& f : folds) {
    eval::FoldResult fr;
    fr.fold_id = f.fold_id;
    fr.n_train = f.train_ids.size();
    fr.n_test = f.test_ids.size();
    fr.confusion = eval::ConfusionMatrix(kNumEmotions);
    try {
      std::vector<int> p, y;
      for (const auto& id : f.test_ids) {
        auto it = decision.find(id);
        if (it == decision.end()) throw DataError("no fused decision for test utterance " + id);
        p.push_back(it->second);
        y.push_back(idx.label.at(id));
      }
      fr.confusion = eval::ConfusionMatrix(p, y, kNumEmotions);
      fr.macro_recall = fr.confusion.macro_recall();
      fr.overall_accuracy = fr.confusion.overall_accuracy();
    } catch (const std::exception& e) {
      fr.failed = true;
      fr.error = e.what();
    }
    r.folds.push_back(std::move(fr));
  }
  r.finalize();
  return r;
}

inline fusion::AlignedProbs load_aligned(const fs::path& speech, const fs::path& text) {
  return fusion::align(fusion::read_prob_file(speech), fusion::read_prob_file(text));
}

}  // namespace detail

struct FuseResult {
  eval::MetricsReport report;
  fs::path fused;
  std::size_t mismatches = 0;  // against a replayed file, when given
};

// Fuses stored speech and text probabilities with the configured weights.
// With `replay`, the decisions recorded there are compared to the fresh
// ones and every disagreement is counted.
inline FuseResult run_fuse(const PipelineConfig& c, const fs::path& speech, const fs::path& text,
                           const fs::path& replay, const Logger& log) {
  const CorpusIndex idx = CorpusIndex::load(c);
  const auto a = detail::load_aligned(speech, text);
  const auto w = c.fusion.weights;
  std::vector<fusion::ProbRecord> fused;
  std::map<std::string, int> decision;
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    fused.push_back({a.ids[i], fusion::fuse(a.speech[i], a.text[i], w), "fused"});
    decision[a.ids[i]] = fused.back().probs.argmax();
  }
  FuseResult res;
  if (!replay.empty()) {
    const auto stored = detail::by_id(fusion::read_prob_file(replay));
    for (const auto& [id, d] : decision) {
      auto it = stored.find(id);
      if (it == stored.end() || it->second.probs.argmax() != d) ++res.mismatches;
    }
    for (const auto& [id, r] : stored)
      if (!decision.count(id)) ++res.mismatches;
    log.info("replay against " + replay.string() + ": " + std::to_string(res.mismatches) + " of " +
             std::to_string(stored.size()) + " stored decisions differ");
  }
  const fs::path dir = c.output_dir / "fuse";
  res.fused = dir / "fused.tsv";
  fusion::write_prob_file(res.fused, fused);
  char tag[64];
  std::snprintf(tag, sizeof(tag), "fused (w1=%.2f, w2=%.2f)", w.w1, w.w2);
  res.report = detail::report_from_decisions(idx.test_folds(), decision, idx, tag);
  res.report.info["w1"] = w.w1;
  res.report.info["w2"] = w.w2;
  eval::write_report(res.report, dir, "fused");
  write_effective_config(c, dir);
  return res;
}

inline std::string svg_sweep(const fusion::SweepResult& r, int steps) {
  const int cell = std::max(16, 360 / (steps + 1)), left = 60, top = 50;
  const int W = left + cell * (steps + 1) + 20, H = top + cell * (steps + 1) + 40;
  double lo = 1e300, hi = -1e300;
  auto score = [&](const fusion::SweepRow& x) {
    return r.criterion == fusion::SweepCriterion::kOverallAccuracy ? x.overall_accuracy : x.macro_recall;
  };
  for (const auto& x : r.rows) {
    lo = std::min(lo, score(x));
    hi = std::max(hi, score(x));
  }
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
    << eval::detail::xml_escape(std::string("fusion sweep, ") + fusion::criterion_name(r.criterion) +
                                (r.tuned_on.empty() ? "" : ", tuned on " + r.tuned_on))
    << "</text>\n";
  for (const auto& x : r.rows) {
    const int i = static_cast<int>(std::lround(x.w.w1 * steps)), j = static_cast<int>(std::lround(x.w.w2 * steps));
    const double t = hi > lo ? (score(x) - lo) / (hi - lo) : 1.0;
    const int shade = static_cast<int>(235 - 190 * t);
    o << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell << "\" width=\"" << cell << "\" height=\""
      << cell << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"><title>w1=" << eval::detail::fixed(x.w.w1, 2)
      << " w2=" << eval::detail::fixed(x.w.w2, 2) << ": " << eval::detail::fixed(score(x), 2) << "</title></rect>\n";
  }
  o << "<text x=\"" << left << "\" y=\"" << H - 12 << "\" font-family=\"sans-serif\" font-size=\"12\">w2 (text) left to right, w1 (speech) top to bottom</text>\n";
  o << "</svg>\n";
  return o.str();
}

// Grid search over (w1, w2) on the stored probabilities of all test folds.
inline fusion::SweepResult run_sweep(const PipelineConfig& c, const fs::path& speech, const fs::path& text,
                                     const Logger& log) {
  const CorpusIndex idx = CorpusIndex::load(c);
  const auto a = detail::load_aligned(speech, text);
  std::vector<int> labels;
  for (const auto& id : a.ids) labels.push_back(idx.label.at(id));
  auto r = fusion::sweep(a, labels, fusion::default_grid(c.fusion.grid_steps), fusion::parse_criterion(c.fusion.criterion),
                         c.fusion.tuned_on);
  const fs::path dir = c.output_dir / "sweep";
  eval::detail::write_text(dir / "sweep.txt", fusion::render_sweep(r));
  eval::detail::write_text(dir / "sweep.json", to_json(r).dump(2) + "\n");
  eval::detail::write_text(dir / "sweep.svg", svg_sweep(r, c.fusion.grid_steps));
  write_effective_config(c, dir);
  log.info("sweep over " + std::to_string(a.ids.size()) + " utterances, tuned on " + c.fusion.tuned_on);
  return r;
}

// Collects every report table present under the output directory.
inline std::string run_report(const PipelineConfig& c) {
  std::ostringstream o;
  const std::vector<std::pair<std::string, fs::path>> parts = {
      {"speech emotion recognition", c.output_dir / "eval" / "ser" / "ser.txt"},
      {"text emotion recognition", c.output_dir / "eval" / "ter" / "ter.txt"},
      {"score fusion", c.output_dir / "fuse" / "fused.txt"},
      {"fusion sweep", c.output_dir / "sweep" / "sweep.txt"},
      {"bottleneck disentanglement", c.output_dir / "probe" / "disentangle.txt"}};
  std::size_t found = 0;
  for (const auto& [title, path] : parts) {
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    o << "== " << title << " (" << path.string() << ")\n" << in.rdbuf() << "\n";
    ++found;
  }
  if (!found) throw DataError("no reports under " + c.output_dir.string() + "; run eval, fuse, sweep or probe first");
  eval::detail::write_text(c.output_dir / "report" / "report.txt", o.str());
  write_effective_config(c, c.output_dir / "report");
  return o.str();
}

}  // namespace emorec::pipeline
