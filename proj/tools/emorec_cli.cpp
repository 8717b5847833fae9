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

// emorec: feature extraction, training, evaluation and fusion driver.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emorec/emorec.hpp"

namespace {

namespace fs = std::filesystem;
using namespace emorec;
using namespace emorec::pipeline;

struct Options {
  std::string config;
  std::vector<std::string> set;
  bool quiet = false;
  bool verbose = false;

  std::string task;
  int fold = -1;
  bool resume = false;

  std::string fold_scores;
  std::string metric = eval::kOverallAccuracyColumn;

  std::string speech;
  std::string text;
  std::string replay;
  std::string w1;
  std::string w2;
  std::string criterion;
  std::string tuned_on;
};

Logger make_logger() {
  return {[](const std::string& m) { spdlog::info("{}", m); }, [](const std::string& m) { spdlog::warn("{}", m); }};
}

PipelineConfig config_of(const Options& o, std::vector<std::string> extra = {}) {
  std::vector<std::string> ov = o.set;
  ov.insert(ov.end(), extra.begin(), extra.end());
  return load_config(o.config, ov);
}

fs::path or_default(const std::string& s, const fs::path& d) { return s.empty() ? d : fs::path(s); }

int cmd_extract(const Options& o, bool synthetic) {
  const PipelineConfig c = config_of(o, synthetic ? std::vector<std::string>{"corpus.source=synthetic"}
                                                  : std::vector<std::string>{});
  const ModelClients clients = make_clients(c);
  const auto st = run_extract(c, clients, make_logger());
  write_effective_config(c, c.cache_dir);
  write_effective_config(c, c.manifest_path().parent_path());
  std::printf("records %zu, extracted %zu, up to date %zu, corrupt %zu, stale %zu\n", st.records, st.extracted,
              st.skipped, st.corrupt.size(), st.stale.size());
  for (const auto& r : st.corrupt) std::printf("re-extracted corrupt record %s\n", r.c_str());
  return kExitOk;
}

int cmd_train(const Options& o, Task t) {
  const PipelineConfig c = config_of(o);
  const auto src = open_features(c);
  const auto r = run_train(c, t, o.fold, o.resume, src, make_logger());
  std::printf("%s fold %d: iterations %lld -> %lld, checkpoint %s\n", task_name(t), o.fold,
              static_cast<long long>(r.start_iteration), static_cast<long long>(r.iterations),
              r.checkpoint.string().c_str());
  return kExitOk;
}

int cmd_eval(const Options& o) {
  if (!o.fold_scores.empty()) {
    std::cout << render_fold_scores(read_fold_scores(o.fold_scores), o.metric);
    return kExitOk;
  }
  if (o.task.empty()) throw UsageError("eval needs --task or --fold-scores");
  const Task t = parse_task(o.task);
  const PipelineConfig c = config_of(o);
  const auto src = open_features(c);
  const auto r = run_eval(c, t, src, make_logger());
  std::cout << eval::render_table(r.report);
  return r.report.any_failed() ? kExitTraining : kExitOk;
}

std::vector<std::string> fusion_overrides(const Options& o) {
  std::vector<std::string> v;
  if (!o.w1.empty()) v.push_back("fusion.w1=" + o.w1);
  if (!o.w2.empty()) v.push_back("fusion.w2=" + o.w2);
  if (!o.criterion.empty()) v.push_back("fusion.criterion=" + o.criterion);
  if (!o.tuned_on.empty()) v.push_back("fusion.tuned_on=" + o.tuned_on);
  return v;
}

int cmd_fuse(const Options& o) {
  const PipelineConfig c = config_of(o, fusion_overrides(o));
  const auto r = run_fuse(c, or_default(o.speech, probs_path(c, Task::kSer)), or_default(o.text, probs_path(c, Task::kTer)),
                          o.replay, make_logger());
  std::cout << eval::render_table(r.report);
  if (!o.replay.empty()) {
    std::printf("replay: %zu decision(s) differ from %s\n", r.mismatches, o.replay.c_str());
    if (r.mismatches) return kExitData;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const PipelineConfig c = config_of(o, fusion_overrides(o));
  const auto r = run_sweep(c, or_default(o.speech, probs_path(c, Task::kSer)),
                           or_default(o.text, probs_path(c, Task::kTer)), make_logger());
  std::cout << fusion::render_sweep(r);
  return kExitOk;
}

int cmd_probe(const Options& o) {
  const PipelineConfig c = config_of(o);
  const auto src = open_features(c);
  std::cout << render_disentangle(run_disentangle(c, src, make_logger()));
  return kExitOk;
}

int cmd_report(const Options& o) {
  std::cout << run_report(config_of(o));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("emorec");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  Options o;
  CLI::App app{"emorec: speech and text emotion recognition pipeline"};
  app.require_subcommand(1);
  app.add_option("-c,--config", o.config, "configuration file (key = value, [section] headers)");
  app.add_option("-s,--set", o.set, "override one setting, e.g. ser.train.lr=1e-3")->take_all();
  app.add_flag("-q,--quiet", o.quiet, "warnings and errors only");
  app.add_flag("-v,--verbose", o.verbose, "debug output");
  app.fallthrough();

  auto* extract = app.add_subcommand("extract", "fill the feature cache from the configured corpus");
  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic corpus manifest, folds and feature cache");

  auto fold_opts = [&](CLI::App* s) {
    s->add_option("-f,--fold", o.fold, "fold id (0 = all data)")->required();
    s->add_flag("--resume", o.resume, "continue from the fold's checkpoint");
  };
  auto* train_ser = app.add_subcommand("train-ser", "train the speech model on one fold");
  fold_opts(train_ser);
  auto* train_ter = app.add_subcommand("train-ter", "train the text model on one fold");
  fold_opts(train_ter);
  auto* train = app.add_subcommand("train", "train the model for --task on one fold");
  train->add_option("-t,--task", o.task, "ser or ter")->required();
  fold_opts(train);

  auto* ev = app.add_subcommand("eval", "cross-validate trained checkpoints");
  ev->add_option("-t,--task", o.task, "ser or ter");
  ev->add_option("--fold-scores", o.fold_scores, "aggregate '<fold> <score>' lines instead");
  ev->add_option("--metric", o.metric, "column label for --fold-scores");

  auto io_opts = [&](CLI::App* s) {
    s->add_option("--speech", o.speech, "speech probabilities (default <output>/eval/ser/probs.tsv)");
    s->add_option("--text", o.text, "text probabilities (default <output>/eval/ter/probs.tsv)");
  };
  auto* fuse = app.add_subcommand("fuse", "combine speech and text probabilities");
  io_opts(fuse);
  fuse->add_option("--w1", o.w1, "speech weight");
  fuse->add_option("--w2", o.w2, "text weight");
  fuse->add_option("--replay", o.replay, "compare with decisions in a stored fused file");
  auto* sw = app.add_subcommand("sweep", "grid search over fusion weights");
  io_opts(sw);
  sw->add_option("--criterion", o.criterion, "overall_accuracy or macro_recall");
  sw->add_option("--tuned-on", o.tuned_on, "label for the data the weights are tuned on");

  auto* probe = app.add_subcommand("probe", "compare speaker information in Small and Large bottleneck codes");
  auto* report = app.add_subcommand("report", "collect existing result tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(o.quiet ? spdlog::level::warn : o.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*extract) return cmd_extract(o, false);
    if (*gen) return cmd_extract(o, true);
    if (*train_ser) return cmd_train(o, Task::kSer);
    if (*train_ter) return cmd_train(o, Task::kTer);
    if (*train) return cmd_train(o, parse_task(o.task));
    if (*ev) return cmd_eval(o);
    if (*fuse) return cmd_fuse(o);
    if (*sw) return cmd_sweep(o);
    if (*probe) return cmd_probe(o);
    if (*report) return cmd_report(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  }
  return kExitUsage;
}
