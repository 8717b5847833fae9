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

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emorec/data/folds.hpp"
#include "emorec/pipeline/config.hpp"
#include "emorec/pipeline/log.hpp"
#include "emorec/ser/trainer.hpp"
#include "emorec/ter/trainer.hpp"

namespace emorec::pipeline {

enum class Task { kSer, kTer };

inline Task parse_task(const std::string& s) {
  if (s == "ser") return Task::kSer;
  if (s == "ter") return Task::kTer;
  throw UsageError("unknown task '" + s + "' (ser or ter)");
}

inline const char* task_name(Task t) { return t == Task::kSer ? "ser" : "ter"; }

// Manifest labels and fold file, read once per command.
struct CorpusIndex {
  Manifest manifest;
  std::vector<FoldSpec> folds;
  std::map<std::string, int> label;
  std::map<std::string, std::string> speaker;

  static CorpusIndex load(const PipelineConfig& c) {
    CorpusIndex x;
    x.manifest = read_manifest(c.manifest_path());
    x.folds = read_folds(c.folds_path());
    if (x.folds.empty()) throw DataError("fold file " + c.folds_path().string() + " lists no folds");
    for (const auto& r : x.manifest) {
      x.label[r.utterance_id] = emotion_index(r.emotion);
      x.speaker[r.utterance_id] = r.speaker_id;
    }
    return x;
  }

  const FoldSpec& fold(int id) const {
    std::string valid;
    for (const auto& f : folds) {
      if (f.fold_id == id) return f;
      valid += (valid.empty() ? "" : ", ") + std::to_string(f.fold_id);
    }
    throw UsageError("invalid fold " + std::to_string(id) + " (fold file has " + valid + ")");
  }

  std::vector<int> labels_of(const std::vector<std::string>& ids) const {
    std::vector<int> y;
    y.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = label.find(id);
      if (it == label.end()) throw DataError("utterance " + id + " is in the fold file but not the manifest");
      y.push_back(it->second);
    }
    return y;
  }

  // Test folds only; the all-data fold 0 has nothing to evaluate.
  std::vector<FoldSpec> test_folds() const {
    std::vector<FoldSpec> out;
    for (const auto& f : folds)
      if (!f.test_ids.empty()) out.push_back(f);
    return out;
  }
};

inline fs::path run_dir(const PipelineConfig& c, Task t, int fold) {
  return c.output_dir / task_name(t) / ("fold" + std::to_string(fold));
}
inline fs::path checkpoint_path(const PipelineConfig& c, Task t, int fold) {
  return run_dir(c, t, fold) / "checkpoint.rec";
}
inline fs::path train_log_path(const PipelineConfig& c, Task t, int fold) {
  return run_dir(c, t, fold) / "train_log.jsonl";
}

struct TrainResult {
  fs::path checkpoint;
  fs::path log;
  std::int64_t start_iteration = 0;
  std::int64_t iterations = 0;
};

namespace detail {

// Keeps log lines up to and including `iteration`; later lines belong to
// steps the checkpoint does not contain.
inline void truncate_log(const fs::path& path, std::int64_t iteration) {
  std::vector<std::string> keep;
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("iter")) continue;
      if (j.at("iter").get<std::int64_t>() <= iteration) keep.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

// Resuming may extend the schedule but must not change anything else. A
// fitted max_tokens counts as matching an unset (0) one.
inline bool same_setup(nlohmann::json have, nlohmann::json want) {
  have["train"].erase("iterations");
  want["train"].erase("iterations");
  if (want.value("max_tokens", 0) == 0) {
    have.erase("max_tokens");
    want.erase("max_tokens");
  }
  return have == want;
}

template <class Trainer, class Config>
TrainResult drive(const PipelineConfig& c, Task task, int fold_id, bool resume, const Logger& log,
                  std::optional<Trainer> trainer, const Config& want, const FeatureSource& src) {
  const fs::path ck = checkpoint_path(c, task, fold_id), logf = train_log_path(c, task, fold_id);
  fs::create_directories(ck.parent_path());
  TrainResult res{ck, logf, 0, want.train.iterations};
  if (resume && fs::exists(ck)) {
    auto t = Trainer::resume(read_record_file(ck), src);
    if (!same_setup(to_json(t.config()), to_json(want)))
      throw UsageError("checkpoint " + ck.string() + " was written with a different configuration");
    res.start_iteration = t.iteration();
    truncate_log(logf, t.iteration());
    log.info(std::string(task_name(task)) + " fold " + std::to_string(fold_id) + ": resuming at iteration " +
             std::to_string(t.iteration()));
    trainer.emplace(std::move(t));
  } else {
    if (resume) log.warn("no checkpoint at " + ck.string() + "; starting from scratch");
    std::ofstream(logf, std::ios::trunc);
  }
  write_effective_config(c, ck.parent_path());
  std::ofstream out(logf, std::ios::app);
  if (!out) throw DataError("cannot write " + logf.string());
  trainer->run(
      want.train.iterations,
      [&](const nlohmann::json& j) {
        out << j.dump() << '\n';
        out.flush();
      },
      ck);
  log.info(std::string(task_name(task)) + " fold " + std::to_string(fold_id) + ": done at iteration " +
           std::to_string(trainer->iteration()));
  return res;
}

}  // namespace detail

// Trains one fold (fold 0 = every utterance) and writes checkpoint.rec,
// train_log.jsonl and config.conf under <output>/<task>/fold<k>.
inline TrainResult run_train(const PipelineConfig& c, Task task, int fold_id, bool resume, const FeatureSource& src,
                             const Logger& log) {
  const CorpusIndex idx = CorpusIndex::load(c);
  const FoldSpec& fold = idx.fold(fold_id);
  const auto labels = idx.labels_of(fold.train_ids);
  if (task == Task::kSer) {
    std::optional<ser::SerTrainer> t;
    if (!(resume && fs::exists(checkpoint_path(c, task, fold_id))))
      t.emplace(c.ser, src, fold.train_ids, labels, ser::fit_mel_normalizer(src, fold.train_ids));
    return detail::drive(c, task, fold_id, resume, log, std::move(t), c.ser, src);
  }
  std::optional<ter::TerTrainer> t;
  if (!(resume && fs::exists(checkpoint_path(c, task, fold_id)))) t.emplace(c.ter, src, fold.train_ids, labels);
  return detail::drive(c, task, fold_id, resume, log, std::move(t), c.ter, src);
}

}  // namespace emorec::pipeline
