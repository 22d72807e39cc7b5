// Copyright 2026  The emokit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// emokit: label aggregation, partitioning, scoring, relabeling, training
// and leaderboard serving for multi-label speech emotion recognition.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "emokit/aggregation.hpp"
#include "emokit/chat_transport.hpp"
#include "emokit/corpus.hpp"
#include "emokit/error.hpp"
#include "emokit/evaluation.hpp"
#include "emokit/features.hpp"
#include "emokit/leaderboard.hpp"
#include "emokit/manifest.hpp"
#include "emokit/partitioning.hpp"
#include "emokit/relabel.hpp"
#include "emokit/trainer.hpp"

namespace fs = std::filesystem;
using namespace emokit;

namespace {

struct Globals {
  std::uint64_t seed = 7;
  std::string manifest;
  std::string log_level = "warn";
};

void WriteManifest(const Globals& g, RunManifest m, const std::optional<fs::path>& primary_output) {
  m.seed = g.seed;
  fs::path where;
  if (!g.manifest.empty()) {
    where = g.manifest;
  } else if (primary_output) {
    where = primary_output->string() + ".manifest.json";
  } else {
    return;
  }
  m.Write(where);
}

std::string Env(const char* name, const std::string& fallback = "") {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

// ---------------------------------------------------------------------------

struct AggregateOpts {
  std::string rule;
  std::string taxonomy = "pod-primary";
  double smoothing = 0.05;
  bool smooth_single = false;
  std::string input, output, report;
};

int RunAggregate(const Globals& g, const AggregateOpts& o) {
  const auto tax = EmotionTaxonomy::Load(o.taxonomy);
  const auto corpus = LoadAnnotations(o.input, tax);
  AggregationOptions opts{ParseRule(o.rule), o.smoothing, o.smooth_single};
  const auto labels = AggregateCorpus(corpus, tax, opts);
  WriteTextFile(o.output, SerializeLabels(labels, tax));
  const Json loss = ComputeDataLoss(corpus, tax).ToJson();
  if (!o.report.empty()) WriteTextFile(o.report, loss.dump(2) + "\n");
  std::cout << loss.dump(2) << "\n";

  RunManifest m{"aggregate",
                {{"rule", ToString(opts.rule)},
                 {"taxonomy", tax.ToJson()},
                 {"smoothing", o.smoothing},
                 {"smooth_single", o.smooth_single}},
                {o.input},
                {o.output}};
  if (!o.report.empty()) m.outputs.push_back(o.report);
  WriteManifest(g, std::move(m), fs::path(o.output));
  return 0;
}

// ---------------------------------------------------------------------------

struct PartitionOpts {
  std::string scheme, fixed_split;
  std::string taxonomy = "pod-primary";
  std::string input, output;
};

int RunPartition(const Globals& g, const PartitionOpts& o) {
  const auto tax = EmotionTaxonomy::Load(o.taxonomy);
  const auto corpus = LoadAnnotations(o.input, tax);
  PartitionScheme scheme;
  if (!o.fixed_split.empty()) {
    scheme = LoadFixedSplit(o.fixed_split);
  } else {
    scheme = fs::exists(o.scheme) ? LoadScheme(o.scheme) : BuiltinScheme(o.scheme);
  }
  const PartitionPlan plan = Assign(scheme, corpus);
  const LeakageReport leakage = CheckLeakage(plan, corpus);
  if (!leakage.ok()) {
    throw Error(ErrorCode::kValidation, "partition leaks speakers or dyads across splits",
                leakage.ToJson());
  }
  WriteTextFile(o.output, plan.Serialize());

  Json summary = {{"scheme", plan.scheme}, {"folds", Json::array()}};
  for (const auto& fold : plan.folds) {
    summary["folds"].push_back({{"train", fold.Ids(Split::kTrain).size()},
                                {"dev", fold.Ids(Split::kDev).size()},
                                {"test", fold.Ids(Split::kTest).size()}});
  }
  std::cout << summary.dump(2) << "\n";

  std::vector<fs::path> inputs{o.input};
  if (!o.fixed_split.empty()) inputs.push_back(o.fixed_split);
  WriteManifest(g,
                RunManifest{"partition",
                            {{"scheme", scheme.ToJson()}, {"taxonomy", tax.ToJson()}},
                            inputs,
                            {o.output}},
                fs::path(o.output));
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateOpts {
  std::string pred, gold, plan, output;
  std::string taxonomy = "pod-primary";
  std::string dataset = "dataset";
  std::string format = "distribution";
  std::string combine = "mean";
  int fold = 0;
  bool json = false;
};

void PrintTable(const EvalResult& r, const EmotionTaxonomy& tax) {
  std::printf("%-12s %10s %10s %10s\n", "class", "precision", "recall", "f1");
  for (std::size_t c = 0; c < tax.size(); ++c) {
    std::printf("%-12s %10.4f %10.4f %10.4f\n", tax[c].c_str(), r.per_class[c].precision,
                r.per_class[c].recall, r.per_class[c].f1);
  }
  std::printf("samples  %zu\nmacro-F1 %.6f\n", r.n_samples, r.macro_f1);
}

int RunEvaluate(const Globals& g, const EvaluateOpts& o) {
  const auto tax = EmotionTaxonomy::Load(o.taxonomy);
  const auto preds = LoadPredictions(o.pred, tax);
  const auto gold = LoadLabels(o.gold, tax);
  const auto format = ParsePredictionFormat(o.format);

  EvalResult result;
  std::optional<int> fold;
  if (o.plan.empty()) {
    if (o.fold != 0) throw Error(ErrorCode::kInvalidArgument, "--fold needs --plan");
    result = ScorePredictions(preds, gold, tax, std::nullopt, format);
  } else {
    const auto plan = PartitionPlan::Load(o.plan);
    if (o.fold < 0 || static_cast<std::size_t>(o.fold) > plan.folds.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "fold " + std::to_string(o.fold) + " out of range for a " +
                      std::to_string(plan.folds.size()) + "-fold plan");
    }
    if (o.fold > 0) {
      fold = o.fold;
      result = ScorePredictions(preds, gold, tax,
                                plan.folds[static_cast<std::size_t>(o.fold - 1)].Ids(Split::kTest),
                                format);
    } else {
      // Every fold is scored on its own test split; one prediction file
      // covers the union of test splits.
      std::set<std::string> all_test;
      for (const auto& f : plan.folds) {
        for (auto& id : f.Ids(Split::kTest)) all_test.insert(id);
      }
      for (const auto& p : preds) {
        if (!all_test.count(p.utterance_id)) {
          throw Error(ErrorCode::kValidation,
                      "prediction for \"" + p.utterance_id + "\" is in no test split",
                      {{"unexpected", {p.utterance_id}}});
        }
      }
      std::vector<EvalResult> per_fold;
      for (const auto& f : plan.folds) {
        const auto ids = f.Ids(Split::kTest);
        const std::set<std::string> wanted(ids.begin(), ids.end());
        std::vector<PredictionRecord> subset;
        for (const auto& p : preds) {
          if (wanted.count(p.utterance_id)) subset.push_back(p);
        }
        per_fold.push_back(ScorePredictions(subset, gold, tax, ids, format));
      }
      result = CombineFolds(per_fold,
                            o.combine == "pool" ? FoldCombine::kPool : FoldCombine::kMean);
    }
  }

  const Json report = ReportJson(result, tax, o.dataset, fold);
  if (o.json) {
    std::cout << report.dump(2) << "\n";
  } else {
    PrintTable(result, tax);
  }
  std::optional<fs::path> out;
  if (!o.output.empty()) {
    WriteTextFile(o.output, report.dump(2) + "\n");
    out = o.output;
  }
  std::vector<fs::path> inputs{o.pred, o.gold};
  if (!o.plan.empty()) inputs.push_back(o.plan);
  WriteManifest(g,
                RunManifest{"evaluate",
                            {{"taxonomy", tax.ToJson()},
                             {"dataset", o.dataset},
                             {"fold", fold ? Json(*fold) : Json(nullptr)},
                             {"format", o.format},
                             {"combine", o.combine}},
                            inputs,
                            out ? std::vector<fs::path>{*out} : std::vector<fs::path>{}},
                out);
  return 0;
}

// ---------------------------------------------------------------------------

struct RelabelOpts {
  std::string input, labels, output, records;
  std::string taxonomy = "pod-primary";
  std::string mock;
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4-0125-preview";
  double temperature = 0.0;
  std::size_t batch_size = 30;
  int max_attempts = 3;
  std::size_t max_in_flight = 1;
  std::optional<double> resmooth;
  bool dry_run = false;
};

int RunRelabel(const Globals& g, const RelabelOpts& o) {
  const auto tax = EmotionTaxonomy::Load(o.taxonomy);
  const auto corpus = LoadAnnotations(o.input, tax);
  const auto requests = CollectRelabelRequests(corpus, tax);

  ClientConfig config;
  config.model = o.model;
  config.temperature = o.temperature;
  config.seed = static_cast<int>(g.seed);
  config.batch_size = o.batch_size;
  config.max_attempts = o.max_attempts;
  config.max_in_flight = o.max_in_flight;
  config.Validate();

  if (o.dry_run) {
    const std::size_t batches = (requests.size() + config.batch_size - 1) / config.batch_size;
    std::cout << Json{{"samples", requests.size()},
                      {"batches", batches},
                      {"estimated_cost_usd", EstimateCost(requests.size(), config)}}
                     .dump(2)
              << "\n";
    return 0;
  }
  if (o.labels.empty() || o.output.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--labels and --output are required");
  }
  const auto labels = LoadLabels(o.labels, tax);

  const fs::path records_path =
      o.records.empty() ? fs::path(o.output + ".relabel.jsonl") : fs::path(o.records);
  std::vector<RelabelRecord> done;
  if (fs::exists(records_path)) done = LoadRelabelRecords(records_path);

  std::unique_ptr<ChatTransport> transport;
  if (!o.mock.empty()) {
    transport = std::make_unique<FixtureTransport>(o.mock);
  } else {
    transport = std::make_unique<HttpChatTransport>(o.base_url, Env(kApiKeyEnv));
  }
  RelabelPipeline pipeline(*transport, config);
  const auto records = pipeline.Run(requests, done);
  WriteTextFile(records_path, SerializeRelabelRecords(records));

  MergeOptions merge;
  merge.resmooth_epsilon = o.resmooth;
  const auto merged = Merge(records, labels, merge);
  WriteTextFile(o.output, SerializeLabels(merged.labels, tax));
  Json stats = merged.stats.ToJson();
  stats["requests_sent"] = pipeline.requests_sent();
  std::cout << stats.dump(2) << "\n";

  Json cfg = {{"model", config.model},
              {"temperature", config.temperature},
              {"seed", config.seed},
              {"json_mode", config.json_mode},
              {"batch_size", config.batch_size},
              {"max_attempts", config.max_attempts},
              {"transport", o.mock.empty() ? "http" : "fixture"},
              {"resmooth", o.resmooth ? Json(*o.resmooth) : Json(nullptr)}};
  std::vector<fs::path> inputs{o.input, o.labels};
  if (!o.mock.empty()) inputs.push_back(o.mock);
  WriteManifest(g, RunManifest{"relabel", cfg, inputs, {records_path, o.output}},
                fs::path(o.output));
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string features, labels, plan, output, predictions;
  std::string taxonomy = "pod-primary";
  int fold = 1;
  TrainConfig config;
};

int RunTrain(const Globals& g, TrainOpts o) {
  o.config.seed = g.seed;
  const auto tax = EmotionTaxonomy::Load(o.taxonomy);
  const auto labels = LoadLabels(o.labels, tax);
  const auto plan = PartitionPlan::Load(o.plan);
  if (o.fold < 1 || static_cast<std::size_t>(o.fold) > plan.folds.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fold " + std::to_string(o.fold) + " out of range");
  }
  const auto& assignment = plan.folds[static_cast<std::size_t>(o.fold - 1)];

  std::map<std::string, std::vector<double>> targets;
  for (const auto& l : labels) {
    if (!l.IsDropped()) targets[l.utterance_id] = l.TargetDistribution(tax.size());
  }
  std::vector<Example> train, dev, test;
  for (const auto& stack : ReadFeatureDir(o.features)) {
    auto role = assignment.roles.find(stack.utterance_id());
    auto target = targets.find(stack.utterance_id());
    if (role == assignment.roles.end() || target == targets.end()) continue;
    auto ex = MakeExample(stack, target->second);
    switch (role->second) {
      case Split::kTrain: train.push_back(std::move(ex)); break;
      case Split::kDev: dev.push_back(std::move(ex)); break;
      case Split::kTest: test.push_back(std::move(ex)); break;
    }
  }
  if (train.empty() || dev.empty()) {
    throw Error(ErrorCode::kValidation, "fold has no labeled train or dev utterances with features");
  }
  const TrainResult result = Train(train, dev, tax.size(), o.config);

  Checkpoint ckpt;
  ckpt.config = o.config;
  ckpt.classes.assign(tax.classes().begin(), tax.classes().end());
  ckpt.params = result.best;
  ckpt.best_epoch = result.best_epoch;
  ckpt.best_dev_loss = result.dev_loss[result.best_epoch - 1];
  ckpt.dev_loss = result.dev_loss;
  WriteTextFile(o.output, ckpt.ToJson().dump() + "\n");

  std::vector<fs::path> outputs{o.output};
  Json summary = {{"train", train.size()},
                  {"dev", dev.size()},
                  {"best_epoch", result.best_epoch},
                  {"best_dev_loss", ckpt.best_dev_loss}};
  if (!o.predictions.empty()) {
    std::vector<PredictionRecord> preds;
    for (const auto& ex : test) {
      const auto logits = Predict(result.best, ex.layer_means);
      preds.push_back({ex.utterance_id,
                       Softmax(std::vector<double>(logits.data(), logits.data() + logits.size()))});
    }
    WriteTextFile(o.predictions, SerializePredictions(preds));
    outputs.push_back(o.predictions);
    summary["test"] = test.size();
  }
  std::cout << summary.dump(2) << "\n";

  WriteManifest(g,
                RunManifest{"train",
                            {{"train_config", o.config.ToJson()},
                             {"taxonomy", tax.ToJson()},
                             {"fold", o.fold}},
                            {o.features, o.labels, o.plan},
                            outputs},
                fs::path(o.output));
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string output;
  SyntheticSpec spec;
};

int RunSynth(const Globals& g, SynthOpts o) {
  o.spec.seed = g.seed;
  const fs::path root = o.output;
  const auto items = GenerateSynthetic(o.spec);
  std::vector<std::string> classes;
  for (std::size_t c = 0; c < o.spec.num_classes; ++c) classes.push_back("c" + std::to_string(c));
  const EmotionTaxonomy tax("synthetic", classes);

  std::vector<LabelRecord> labels;
  FoldAssignment fold;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& id = items[i].stack.utterance_id();
    WriteFeatureStack(items[i].stack, root / "features" / (id + ".json"));
    LabelRecord rec;
    rec.utterance_id = id;
    rec.label = SingleLabel{items[i].label};
    labels.push_back(std::move(rec));
    // Labels cycle through the classes, so split on the cycle number to keep
    // every class in every split (80/10/10).
    const std::size_t cycle = (i / o.spec.num_classes) % 10;
    fold.roles[id] = cycle == 8 ? Split::kDev : cycle == 9 ? Split::kTest : Split::kTrain;
  }
  WriteTextFile(root / "taxonomy.json", tax.ToJson().dump(2) + "\n");
  WriteTextFile(root / "labels.jsonl", SerializeLabels(labels, tax));
  PartitionPlan plan{"synthetic-80-10-10", {fold}};
  WriteTextFile(root / "plan.json", plan.Serialize());
  std::cout << Json{{"utterances", items.size()}, {"classes", classes}}.dump() << "\n";

  WriteManifest(g,
                RunManifest{"synth",
                            {{"classes", o.spec.num_classes},
                             {"layers", o.spec.layers},
                             {"frames", o.spec.frames},
                             {"dims", o.spec.dims},
                             {"utterances", o.spec.utterances},
                             {"separation", o.spec.separation},
                             {"noise", o.spec.noise}},
                            {},
                            {root / "features", root / "taxonomy.json", root / "labels.jsonl",
                             root / "plan.json"}},
                root / "synth");
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportOpts {
  std::string checkpoints, data_dir, models, out;
};

int RunReport(const Globals& g, const ReportOpts& o) {
  if (o.checkpoints.empty() == o.models.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give either --checkpoints or --models");
  }
  Json report;
  std::vector<fs::path> inputs;
  if (!o.checkpoints.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(o.checkpoints)) {
      if (e.path().extension() == ".json" &&
          e.path().string().find(".manifest.") == std::string::npos) {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::kNotFound, "no checkpoints in " + o.checkpoints);
    std::vector<HeadParams> params;
    for (const auto& f : files) params.push_back(Checkpoint::Load(f).params);
    report = ReportLayerWeights(params).ToJson();
    inputs.push_back(o.checkpoints);
  } else {
    if (o.data_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "--models needs --data-dir");
    std::vector<std::string> models;
    std::stringstream ss(o.models);
    for (std::string m; std::getline(ss, m, ',');) {
      if (!m.empty()) models.push_back(m);
    }
    Leaderboard board(o.data_dir);
    report = board.Compare(models);
    inputs.push_back(fs::path(o.data_dir) / "submissions.jsonl");
  }
  WriteTextFile(o.out, report.dump(2) + "\n");
  WriteManifest(g,
                RunManifest{"report",
                            {{"source", o.checkpoints.empty() ? "leaderboard" : "checkpoints"}},
                            inputs,
                            {o.out}},
                fs::path(o.out));
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeOpts {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir, token;
};

int RunServe(const Globals& g, const ServeOpts& o) {
  if (o.data_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "--data-dir is required");
  if (o.token.empty()) throw Error(ErrorCode::kInvalidArgument, "--token is required");
  Leaderboard board(o.data_dir);
  LeaderboardServer server(board, o.token);
  const int port = server.Bind(o.host, o.port);
  WriteManifest(g,
                RunManifest{"serve",
                            {{"host", o.host}, {"port", port}, {"datasets", board.Datasets()}},
                            {},
                            {}},
                fs::path(o.data_dir) / "serve");
  spdlog::info("listening on {}:{}", o.host, port);
  std::printf("listening on %s:%d\n", o.host.c_str(), port);
  std::fflush(stdout);
  server.Listen();
  return 0;
}

void EmitError(const Json& err) { std::cerr << err.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_logger_st("emokit"));

  CLI::App app{"emokit: multi-label speech emotion recognition benchmark toolkit", "emokit"};
  app.set_version_flag("--version", std::string(EMOKIT_VERSION));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every stochastic component")->capture_default_str();
  app.add_option("--manifest", g.manifest, "Write the run manifest here instead of next to the output");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  AggregateOpts agg;
  auto* c_agg = app.add_subcommand("aggregate", "Turn per-rater votes into training labels");
  c_agg->add_option("--rule", agg.rule, "Aggregation rule")
      ->required()
      ->check(CLI::IsMember({"mr", "pr", "ar"}));
  c_agg->add_option("--taxonomy", agg.taxonomy, "Taxonomy name or JSON file")->capture_default_str();
  c_agg->add_option("--smoothing", agg.smoothing, "Label smoothing factor for distributions")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c_agg->add_flag("--smooth-single", agg.smooth_single, "Also smooth MR/PR one-hot labels");
  c_agg->add_option("--input", agg.input, "Annotation JSONL")->required();
  c_agg->add_option("--output", agg.output, "Label JSONL")->required();
  c_agg->add_option("--report", agg.report, "Also write the data-loss report here");

  PartitionOpts part;
  auto* c_part = app.add_subcommand("partition", "Assign utterances to speaker-independent folds");
  auto* scheme_opt = c_part->add_option("--scheme", part.scheme, "Built-in scheme name or JSON file");
  auto* fixed_opt = c_part->add_option("--fixed-split", part.fixed_split,
                                       "JSON file with fixed train/dev/test speaker lists");
  scheme_opt->excludes(fixed_opt);
  c_part->add_option("--taxonomy", part.taxonomy, "Taxonomy name or JSON file")
      ->capture_default_str();
  c_part->add_option("--input", part.input, "Annotation JSONL")->required();
  c_part->add_option("--output", part.output, "Partition plan JSON")->required();

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score predictions with the 1/C-threshold macro-F1");
  c_ev->add_option("--pred", ev.pred, "Prediction JSONL")->required();
  c_ev->add_option("--gold", ev.gold, "Label JSONL")->required();
  c_ev->add_option("--plan", ev.plan, "Partition plan; restricts scoring to test splits");
  c_ev->add_option("--fold", ev.fold, "1-based fold; 0 scores every fold and combines them")
      ->capture_default_str();
  c_ev->add_option("--combine", ev.combine, "Fold combination")
      ->capture_default_str()
      ->check(CLI::IsMember({"mean", "pool"}));
  c_ev->add_option("--format", ev.format, "Prediction format")
      ->capture_default_str()
      ->check(CLI::IsMember({"distribution", "multihot"}));
  c_ev->add_option("--taxonomy", ev.taxonomy, "Taxonomy name or JSON file")->capture_default_str();
  c_ev->add_option("--dataset", ev.dataset, "Dataset name recorded in the report")
      ->capture_default_str();
  c_ev->add_option("--output", ev.output, "Write the JSON report here");
  c_ev->add_flag("--json", ev.json, "Print the JSON report instead of the table");

  RelabelOpts rl;
  auto* c_rl = app.add_subcommand("relabel", "Relabel typed descriptions through a chat model");
  c_rl->add_option("--input", rl.input, "Annotation JSONL")->required();
  c_rl->add_option("--labels", rl.labels, "Label JSONL to update");
  c_rl->add_option("--output", rl.output, "Merged label JSONL");
  c_rl->add_option("--records", rl.records,
                   "Relabel record JSONL; existing records are reused (default <output>.relabel.jsonl)");
  c_rl->add_option("--taxonomy", rl.taxonomy, "Taxonomy name or JSON file")->capture_default_str();
  c_rl->add_option("--mock", rl.mock, "Directory of recorded replies used instead of the network");
  c_rl->add_option("--base-url", rl.base_url, "Chat-completions endpoint base URL")
      ->capture_default_str();
  c_rl->add_option("--model", rl.model, "Chat model")->capture_default_str();
  c_rl->add_option("--temperature", rl.temperature, "Sampling temperature")->capture_default_str();
  c_rl->add_option("--batch-size", rl.batch_size, "Items per request")
      ->capture_default_str()
      ->check(CLI::Range(1, 30));
  c_rl->add_option("--max-attempts", rl.max_attempts, "Attempts per item before falling back")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_rl->add_option("--max-in-flight", rl.max_in_flight, "Concurrent requests")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_rl->add_option("--resmooth", rl.resmooth, "Smooth adjusted distributions with this factor");
  c_rl->add_flag("--dry-run", rl.dry_run, "Only print the request count and estimated cost");

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train", "Train the layer-weighted downstream head");
  c_tr->add_option("--features", tr.features, "Directory of feature stacks")->required();
  c_tr->add_option("--labels", tr.labels, "Label JSONL")->required();
  c_tr->add_option("--plan", tr.plan, "Partition plan")->required();
  c_tr->add_option("--fold", tr.fold, "1-based fold")->capture_default_str();
  c_tr->add_option("--taxonomy", tr.taxonomy, "Taxonomy name or JSON file")->capture_default_str();
  c_tr->add_option("--output", tr.output, "Checkpoint JSON")->required();
  c_tr->add_option("--predictions", tr.predictions, "Write test-split predictions here");
  c_tr->add_option("--beta", tr.config.beta, "Class-balance beta")->capture_default_str();
  c_tr->add_option("--lr", tr.config.learning_rate, "AdamW learning rate")->capture_default_str();
  c_tr->add_option("--epochs", tr.config.epochs, "Epochs")->capture_default_str();
  c_tr->add_option("--batch-size", tr.config.batch_size, "Mini-batch size")->capture_default_str();
  c_tr->add_option("--weight-decay", tr.config.weight_decay, "AdamW weight decay")
      ->capture_default_str();
  c_tr->add_option("--hidden", tr.config.hidden, "Hidden width")->capture_default_str();

  SynthOpts sy;
  auto* c_sy = app.add_subcommand("synth", "Write a synthetic separable feature corpus");
  c_sy->add_option("--output", sy.output, "Output directory")->required();
  c_sy->add_option("--classes", sy.spec.num_classes, "Classes")->capture_default_str();
  c_sy->add_option("--layers", sy.spec.layers, "Layers")->capture_default_str();
  c_sy->add_option("--frames", sy.spec.frames, "Frames per utterance")->capture_default_str();
  c_sy->add_option("--dims", sy.spec.dims, "Feature dimensions")->capture_default_str();
  c_sy->add_option("--utterances", sy.spec.utterances, "Utterances")->capture_default_str();
  c_sy->add_option("--separation", sy.spec.separation, "Centroid spread")->capture_default_str();
  c_sy->add_option("--noise", sy.spec.noise, "Frame noise")->capture_default_str();

  ReportOpts rp;
  auto* c_rp = app.add_subcommand("report", "Layer-weight or model-comparison report");
  c_rp->add_option("--checkpoints", rp.checkpoints, "Directory of checkpoints");
  c_rp->add_option("--data-dir", rp.data_dir, "Leaderboard data directory");
  c_rp->add_option("--models", rp.models, "Comma-separated model names to compare");
  c_rp->add_option("--out", rp.out, "Report JSON")->required();

  ServeOpts sv;
  sv.port = std::atoi(Env("EMOKIT_PORT", "8080").c_str());
  sv.data_dir = Env("EMOKIT_DATA_DIR");
  sv.token = Env("EMOKIT_TOKEN");
  auto* c_sv = app.add_subcommand("serve", "Run the leaderboard HTTP service");
  c_sv->add_option("--host", sv.host, "Bind address")->capture_default_str();
  c_sv->add_option("--port", sv.port, "Port (env EMOKIT_PORT); 0 picks a free one");
  c_sv->add_option("--data-dir", sv.data_dir, "Data directory (env EMOKIT_DATA_DIR)");
  c_sv->add_option("--token", sv.token, "Submission bearer token (env EMOKIT_TOKEN)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    EmitError(Error(ErrorCode::kInvalidArgument, e.what()).ToJson());
    return 2;
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*c_agg) return RunAggregate(g, agg);
    if (*c_part) {
      if (part.scheme.empty() == part.fixed_split.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "give either --scheme or --fixed-split");
      }
      return RunPartition(g, part);
    }
    if (*c_ev) return RunEvaluate(g, ev);
    if (*c_rl) return RunRelabel(g, rl);
    if (*c_tr) return RunTrain(g, tr);
    if (*c_sy) return RunSynth(g, sy);
    if (*c_rp) return RunReport(g, rp);
    if (*c_sv) return RunServe(g, sv);
  } catch (const Error& e) {
    EmitError(e.ToJson());
    return 1;
  } catch (const std::exception& e) {
    EmitError({{"error", {{"code", "internal_error"}, {"message", e.what()}}}});
    return 1;
  }
  return 1;
}
