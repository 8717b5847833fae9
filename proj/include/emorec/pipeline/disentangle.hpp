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

// Small versus Large bottleneck comparison: for each seed and fold an SER
// model is trained on the session fold's training speakers, its emotion
// accuracy is measured on the held-out session, and a speaker-ID probe is
// trained on its frozen utterance codes over the matching probe fold.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/pipeline/evaluate.hpp"
#include "emorec/probe/probe.hpp"

namespace emorec::pipeline {

struct DisentangleRun {
  std::string bottleneck;
  std::uint64_t seed = 0;
  int fold = 0;
  double emotion_accuracy = 0.0;  // overall accuracy on the held-out session
  double speaker_accuracy = 0.0;  // probe overall accuracy
  double shuffled_accuracy = 0.0;  // probe trained on permuted speaker labels
  double chance = 0.0;
};

struct DisentangleResult {
  std::vector<DisentangleRun> runs;
  double margin = 5.0;

  double mean(const std::string& bn, double DisentangleRun::*field) const {
    double s = 0.0;
    int n = 0;
    for (const auto& r : runs)
      if (r.bottleneck == bn) {
        s += r.*field;
        ++n;
      }
    return n ? s / n : 0.0;
  }
  bool speaker_direction() const {
    return mean("Small", &DisentangleRun::speaker_accuracy) < mean("Large", &DisentangleRun::speaker_accuracy);
  }
  bool emotion_kept() const {
    return mean("Small", &DisentangleRun::emotion_accuracy) >= mean("Large", &DisentangleRun::emotion_accuracy) - margin;
  }
  bool holds() const { return speaker_direction() && emotion_kept(); }
};

inline nlohmann::json to_json(const DisentangleResult& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& x : r.runs)
    runs.push_back({{"bottleneck", x.bottleneck},
                    {"seed", x.seed},
                    {"fold", x.fold},
                    {"emotion_accuracy", x.emotion_accuracy},
                    {"speaker_accuracy", x.speaker_accuracy},
                    {"shuffled_accuracy", x.shuffled_accuracy},
                    {"chance", x.chance}});
  nlohmann::json means = nlohmann::json::object();
  for (const char* bn : {"Small", "Large"})
    means[bn] = {{"emotion_accuracy", r.mean(bn, &DisentangleRun::emotion_accuracy)},
                 {"speaker_accuracy", r.mean(bn, &DisentangleRun::speaker_accuracy)},
                 {"shuffled_accuracy", r.mean(bn, &DisentangleRun::shuffled_accuracy)}};
  return {{"runs", runs},
          {"means", means},
          {"emotion_margin", r.margin},
          {"speaker_small_below_large", r.speaker_direction()},
          {"emotion_small_within_margin", r.emotion_kept()},
          {"direction_holds", r.holds()}};
}

inline std::string render_disentangle(const DisentangleResult& r) {
  std::ostringstream o;
  using eval::detail::fixed;
  o << "bottleneck\tseed\tfold\temotion_acc\tspeaker_acc\tshuffled_acc\tchance\n";
  for (const auto& x : r.runs)
    o << x.bottleneck << '\t' << x.seed << '\t' << x.fold << '\t' << fixed(x.emotion_accuracy) << '\t'
      << fixed(x.speaker_accuracy) << '\t' << fixed(x.shuffled_accuracy) << '\t' << fixed(x.chance) << '\n';
  for (const char* bn : {"Small", "Large"})
    o << "mean " << bn << ": emotion " << fixed(r.mean(bn, &DisentangleRun::emotion_accuracy)) << ", speaker "
      << fixed(r.mean(bn, &DisentangleRun::speaker_accuracy)) << ", shuffled "
      << fixed(r.mean(bn, &DisentangleRun::shuffled_accuracy)) << '\n';
  o << "speaker accuracy Small < Large: " << (r.speaker_direction() ? "yes" : "no") << '\n';
  o << "emotion accuracy Small >= Large - " << fixed(r.margin) << ": " << (r.emotion_kept() ? "yes" : "no") << '\n';
  o << "direction " << (r.holds() ? "holds" : "does not hold") << '\n';
  return o.str();
}

inline std::string svg_disentangle(const DisentangleResult& r) {
  const int W = 420, H = 300, left = 50, top = 40, base = H - 50;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">mean accuracy by bottleneck</text>\n";
  const double scale = (base - top) / 100.0;
  int x = left + 10;
  for (const char* bn : {"Small", "Large"}) {
    const double e = r.mean(bn, &DisentangleRun::emotion_accuracy), s = r.mean(bn, &DisentangleRun::speaker_accuracy);
    o << "<rect x=\"" << x << "\" y=\"" << base - e * scale << "\" width=\"50\" height=\"" << e * scale
      << "\" fill=\"#4a7ab7\"/>\n<rect x=\"" << x + 55 << "\" y=\"" << base - s * scale << "\" width=\"50\" height=\""
      << s * scale << "\" fill=\"#d98c3f\"/>\n<text x=\"" << x + 20 << "\" y=\"" << base + 18
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << bn << "</text>\n";
    x += 160;
  }
  o << "<text x=\"" << left << "\" y=\"" << H - 10
    << "\" font-family=\"sans-serif\" font-size=\"11\">blue: emotion (held-out session), orange: speaker probe</text>\n";
  o << "</svg>\n";
  return o.str();
}

// `src` must serve every utterance of the selected folds.
inline DisentangleResult run_disentangle(const PipelineConfig& c, const FeatureSource& src, const Logger& log) {
  const CorpusIndex idx = CorpusIndex::load(c);
  if (!fs::exists(c.probe_folds_path()))
    throw DataError("no probe folds at " + c.probe_folds_path().string() + "; the corpus must cover all five sessions");
  const auto probe_folds = read_folds(c.probe_folds_path());
  DisentangleResult res;
  res.margin = c.disentangle.emotion_margin;
  const fs::path dir = c.output_dir / "probe";
  for (std::uint64_t seed : c.disentangle.seeds)
    for (const auto& bn : {ser::BottleneckConfig::small(), ser::BottleneckConfig::large()})
      for (int k : c.disentangle.folds) {
        const FoldSpec& fold = idx.fold(k);
        const FoldSpec* pf = nullptr;
        for (const auto& p : probe_folds)
          if (p.fold_id == k) pf = &p;
        if (!pf) throw DataError("probe fold " + std::to_string(k) + " is missing from " + c.probe_folds_path().string());

        ser::SerConfig sc = c.ser;
        sc.bottleneck = bn;
        sc.train.seed = seed;
        ser::SerTrainer tr(sc, src, fold.train_ids, idx.labels_of(fold.train_ids),
                           ser::fit_mel_normalizer(src, fold.train_ids));
        tr.run(sc.train.iterations, {});

        DisentangleRun run{bn.name, seed, k};
        int hit = 0;
        for (const auto& id : fold.test_ids)
          hit += ser::infer_utterance(tr.model(), *src.speech(id)).argmax() == idx.label.at(id);
        run.emotion_accuracy = fold.test_ids.empty() ? 0.0 : 100.0 * hit / static_cast<double>(fold.test_ids.size());

        std::map<std::string, std::vector<double>> codes;
        for (const auto* ids : {&pf->train_ids, &pf->test_ids})
          for (const auto& id : *ids) codes[id] = ser::utterance_code(tr.model(), *src.speech(id));
        auto feat = [&](int, const std::string& id) { return codes.at(id); };
        auto spk = [&](const std::string& id) { return idx.speaker.at(id); };
        probe::ProbeConfig pc = c.probe;
        pc.seed = seed;
        auto report = probe::run_probe({*pf}, feat, spk, pc);
        const auto shuffled = probe::run_probe({*pf}, feat, spk, pc, true);
        if (report.any_failed()) throw DataError("speaker probe failed: " + report.folds[0].error);
        run.speaker_accuracy = report.folds[0].overall_accuracy;
        run.shuffled_accuracy = shuffled.folds[0].overall_accuracy;
        run.chance = 100.0 / static_cast<double>(report.class_names.size());
        report.info["bottleneck"] = bn.name;
        report.info["seed"] = seed;
        eval::write_report(report, dir, "speaker_" + bn.name + "_seed" + std::to_string(seed) + "_fold" + std::to_string(k));
        log.info("probe " + bn.name + " seed " + std::to_string(seed) + " fold " + std::to_string(k) + ": emotion " +
                 eval::detail::fixed(run.emotion_accuracy) + ", speaker " + eval::detail::fixed(run.speaker_accuracy) +
                 ", shuffled " + eval::detail::fixed(run.shuffled_accuracy));
        res.runs.push_back(run);
      }
  eval::detail::write_text(dir / "disentangle.txt", render_disentangle(res));
  eval::detail::write_text(dir / "disentangle.json", to_json(res).dump(2) + "\n");
  eval::detail::write_text(dir / "disentangle.svg", svg_disentangle(res));
  write_effective_config(c, dir);
  return res;
}

}  // namespace emorec::pipeline
