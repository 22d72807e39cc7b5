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

#include "emokit/leaderboard.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "emokit/error.hpp"
#include "emokit/hashing.hpp"

namespace fs = std::filesystem;

namespace emokit {

BenchmarkDataset BenchmarkDataset::LoadDir(const fs::path& dir) {
  BenchmarkDataset ds{dir.filename().string(),
                      EmotionTaxonomy::FromJson(ReadJsonFile(dir / "taxonomy.json")),
                      PartitionPlan::Load(dir / "plan.json"),
                      {}};
  const fs::path gold_dir = dir / "gold";
  if (fs::is_directory(gold_dir)) {
    for (const auto& entry : fs::directory_iterator(gold_dir)) {
      if (entry.path().extension() != ".jsonl") continue;
      ds.gold.emplace(entry.path().stem().string(), LoadLabels(entry.path(), ds.taxonomy));
    }
  }
  if (ds.gold.empty()) {
    throw Error(ErrorCode::kValidation, "dataset \"" + ds.name + "\" has no gold/*.jsonl files");
  }
  if (ds.plan.folds.empty()) {
    throw Error(ErrorCode::kValidation, "dataset \"" + ds.name + "\" has an empty plan");
  }
  return ds;
}

SubmissionMetadata SubmissionMetadata::FromJson(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "submission metadata must be a JSON object");
  SubmissionMetadata m;
  m.model_name = RequireString(j, "model_name");
  if (m.model_name.empty()) throw Error(ErrorCode::kInvalidArgument, "model_name is empty");
  m.dataset = RequireString(j, "dataset");
  m.condition = OptionalString(j, "condition").value_or("");
  if (j.contains("fold") && !j["fold"].is_null()) {
    if (!j["fold"].is_number_integer()) {
      throw Error(ErrorCode::kInvalidArgument, "fold must be an integer");
    }
    m.fold = j["fold"].get<int>();
  }
  if (auto f = OptionalString(j, "format")) m.format = ParsePredictionFormat(*f);
  return m;
}

namespace {

Json ScoreJson(const EvalResult& r, const EmotionTaxonomy& tax, bool with_counts) {
  Json per_class = Json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    per_class.push_back({{"class", tax[c]},
                         {"precision", r.per_class[c].precision},
                         {"recall", r.per_class[c].recall},
                         {"f1", r.per_class[c].f1}});
  }
  Json out = {{"macro_f1", r.macro_f1}, {"per_class", per_class}, {"n_samples", r.n_samples}};
  if (with_counts) {
    out["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
  }
  return out;
}

}  // namespace

Json ToJson(const Submission& s, const EmotionTaxonomy& taxonomy) {
  return {{"id", s.id},
          {"sequence", s.sequence},
          {"idempotency_key", s.idempotency_key},
          {"payload_hash", s.payload_hash},
          {"model_name", s.model_name},
          {"dataset", s.dataset},
          {"condition", s.condition},
          {"fold", s.fold},
          {"format", ToString(s.format)},
          {"created_at", s.created_at},
          {"score", ScoreJson(s.score, taxonomy, true)}};
}

Submission SubmissionFromJson(const Json& j, const EmotionTaxonomy& taxonomy) {
  Submission s;
  s.id = RequireString(j, "id");
  s.sequence = RequireField(j, "sequence").get<std::uint64_t>();
  s.idempotency_key = OptionalString(j, "idempotency_key").value_or("");
  s.payload_hash = RequireString(j, "payload_hash");
  s.model_name = RequireString(j, "model_name");
  s.dataset = RequireString(j, "dataset");
  s.condition = RequireString(j, "condition");
  s.fold = RequireField(j, "fold").get<int>();
  s.format = ParsePredictionFormat(RequireString(j, "format"));
  s.created_at = RequireString(j, "created_at");
  const Json& counts = RequireField(RequireField(j, "score"), "counts");
  ConfusionCounts cc(taxonomy.size());
  cc.tp = counts.at("tp").get<std::vector<std::uint64_t>>();
  cc.fp = counts.at("fp").get<std::vector<std::uint64_t>>();
  cc.fn = counts.at("fn").get<std::vector<std::uint64_t>>();
  if (cc.tp.size() != taxonomy.size() || cc.fp.size() != taxonomy.size() ||
      cc.fn.size() != taxonomy.size()) {
    throw Error(ErrorCode::kDimension, "stored counts do not match the taxonomy");
  }
  s.score = ScoreCounts(cc, RequireField(j["score"], "n_samples").get<std::size_t>());
  return s;
}

std::string UtcNowIso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

Json LeaderboardRow::ToJson() const {
  return {{"model_name", model_name},
          {"scores", scores},
          {"first_submitted", first_submitted},
          {"average", average}};
}

std::vector<LeaderboardRow> BuildRows(std::span<const Submission> log) {
  // model -> condition -> fold -> latest submission
  std::map<std::string, std::map<std::string, std::map<int, const Submission*>>> latest;
  std::map<std::string, std::map<std::string, std::string>> first;
  for (const auto& s : log) {
    auto& slot = latest[s.model_name][s.ConditionKey()][s.fold];
    if (!slot || slot->sequence < s.sequence) slot = &s;
    auto& f = first[s.model_name][s.ConditionKey()];
    if (f.empty() || s.created_at < f) f = s.created_at;
  }
  std::vector<LeaderboardRow> rows;
  for (const auto& [model, conditions] : latest) {
    LeaderboardRow row;
    row.model_name = model;
    double total = 0.0;
    for (const auto& [cond, folds] : conditions) {
      double sum = 0.0;
      for (const auto& [fold, sub] : folds) sum += sub->score.macro_f1;
      row.scores[cond] = sum / static_cast<double>(folds.size());
      row.first_submitted[cond] = first[model][cond];
      total += row.scores[cond];
    }
    row.average = row.scores.empty() ? 0.0 : total / static_cast<double>(row.scores.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

Leaderboard::Leaderboard(fs::path data_dir) : Leaderboard(std::move(data_dir), Options{}) {}

Leaderboard::Leaderboard(fs::path data_dir, Options options)
    : data_dir_(std::move(data_dir)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = UtcNowIso8601;
  fs::create_directories(data_dir_ / "predictions");
  const fs::path ds_root = data_dir_ / "datasets";
  if (fs::is_directory(ds_root)) {
    for (const auto& entry : fs::directory_iterator(ds_root)) {
      if (!entry.is_directory()) continue;
      auto ds = BenchmarkDataset::LoadDir(entry.path());
      datasets_.emplace(ds.name, std::move(ds));
    }
  }
  LoadLog();
}

void Leaderboard::LoadLog() {
  const fs::path path = data_dir_ / "submissions.jsonl";
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  ForEachJsonLine(in, path.string(), [&](const Json& j, std::size_t) {
    const auto& ds = RequireDataset(RequireString(j, "dataset"));
    Submission s = SubmissionFromJson(j, ds.taxonomy);
    by_id_[s.id] = log_.size();
    if (!s.idempotency_key.empty()) by_key_[s.idempotency_key] = log_.size();
    log_.push_back(std::move(s));
  });
}

const BenchmarkDataset& Leaderboard::RequireDataset(const std::string& name) const {
  auto it = datasets_.find(name);
  if (it == datasets_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown dataset \"" + name + "\"");
  }
  return it->second;
}

std::string Leaderboard::ResolveCondition(const BenchmarkDataset& ds,
                                          const std::string& condition) const {
  if (condition.empty()) {
    if (ds.gold.size() == 1) return ds.gold.begin()->first;
    throw Error(ErrorCode::kInvalidArgument,
                "dataset \"" + ds.name + "\" has several conditions; name one");
  }
  if (!ds.gold.count(condition)) {
    throw Error(ErrorCode::kNotFound,
                "unknown condition \"" + condition + "\" for dataset \"" + ds.name + "\"");
  }
  return condition;
}

Leaderboard::SubmitOutcome Leaderboard::Submit(const Json& metadata,
                                               std::string_view predictions_jsonl,
                                               const std::optional<std::string>& idempotency_key) {
  const SubmissionMetadata meta = SubmissionMetadata::FromJson(metadata);
  const BenchmarkDataset& ds = RequireDataset(meta.dataset);
  const std::string condition = ResolveCondition(ds, meta.condition);
  int fold = 1;
  if (meta.fold) {
    fold = *meta.fold;
  } else if (ds.plan.folds.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "dataset \"" + ds.name + "\" has " +
                                                 std::to_string(ds.plan.folds.size()) +
                                                 " folds; declare one");
  }
  if (fold < 1 || static_cast<std::size_t>(fold) > ds.plan.folds.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fold " + std::to_string(fold) + " out of range");
  }

  std::string canonical = meta.model_name + '\n' + meta.dataset + '\n' + condition + '\n' +
                          std::to_string(fold) + '\n' + std::string(ToString(meta.format)) + '\n';
  canonical += predictions_jsonl;
  const std::string payload_hash = Sha256Hex(canonical);
  const std::string key = idempotency_key.value_or("");

  auto replay = [&]() -> std::optional<SubmitOutcome> {
    if (key.empty()) return std::nullopt;
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    const Submission& prior = log_[it->second];
    if (prior.payload_hash != payload_hash) {
      throw Error(ErrorCode::kConflict,
                  "idempotency key \"" + key + "\" was used for a different payload",
                  {{"submission", prior.id}});
    }
    return SubmitOutcome{prior, false};
  };
  {
    std::shared_lock lock(mutex_);
    if (auto r = replay()) return *r;
  }

  // Scoring is stateless and runs outside the writer lock.
  std::istringstream in{std::string(predictions_jsonl)};
  const auto preds = ParsePredictions(in, ds.taxonomy, "predictions");
  const auto subset = ds.plan.folds[static_cast<std::size_t>(fold - 1)].Ids(Split::kTest);
  EvalResult score = ScorePredictions(preds, ds.gold.at(condition), ds.taxonomy, subset,
                                      meta.format);

  Submission s;
  {
    std::unique_lock lock(mutex_);
    if (auto r = replay()) return *r;
    s.sequence = log_.size() + 1;
    char id[32];
    std::snprintf(id, sizeof(id), "sub-%06llu", static_cast<unsigned long long>(s.sequence));
    s.id = id;
    s.idempotency_key = key;
    s.payload_hash = payload_hash;
    s.model_name = meta.model_name;
    s.dataset = meta.dataset;
    s.condition = condition;
    s.fold = fold;
    s.format = meta.format;
    s.created_at = options_.clock();
    s.score = std::move(score);

    WriteTextFile(data_dir_ / "predictions" / (s.id + ".jsonl"), predictions_jsonl);
    std::ofstream log(data_dir_ / "submissions.jsonl", std::ios::app);
    log << ToJson(s, ds.taxonomy).dump() << '\n';
    log.flush();
    if (!log) throw Error(ErrorCode::kIo, "cannot append to the submission log");

    by_id_[s.id] = log_.size();
    if (!key.empty()) by_key_[key] = log_.size();
    log_.push_back(s);
  }
  if (options_.on_scored) options_.on_scored(s);
  return {s, true};
}

std::vector<LeaderboardRow> Leaderboard::Rankings(const std::string& dataset,
                                                  const std::string& condition) const {
  const BenchmarkDataset& ds = RequireDataset(dataset);
  const std::string cond_key = dataset + "/" + ResolveCondition(ds, condition);
  std::shared_lock lock(mutex_);
  std::map<std::string, std::uint64_t> first_seq;
  for (const auto& s : log_) {
    if (s.ConditionKey() == cond_key && !first_seq.count(s.model_name)) {
      first_seq[s.model_name] = s.sequence;
    }
  }
  std::vector<LeaderboardRow> rows;
  for (auto& row : BuildRows(log_)) {
    if (row.scores.count(cond_key)) rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    const double sa = a.scores.at(cond_key), sb = b.scores.at(cond_key);
    if (sa != sb) return sa > sb;
    const auto& fa = a.first_submitted.at(cond_key);
    const auto& fb = b.first_submitted.at(cond_key);
    if (fa != fb) return fa < fb;
    return first_seq[a.model_name] < first_seq[b.model_name];
  });
  return rows;
}

std::optional<Submission> Leaderboard::Get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return log_[it->second];
}

Json Leaderboard::Compare(std::span<const std::string> models) const {
  std::shared_lock lock(mutex_);
  const auto rows = BuildRows(log_);
  std::map<std::string, const LeaderboardRow*> by_model;
  for (const auto& r : rows) by_model[r.model_name] = &r;
  std::set<std::string> conditions;
  for (const auto& m : models) {
    auto it = by_model.find(m);
    if (it == by_model.end()) throw Error(ErrorCode::kNotFound, "unknown model \"" + m + "\"");
    for (const auto& [cond, score] : it->second->scores) conditions.insert(cond);
  }
  Json matrix = Json::array();
  for (const auto& m : models) {
    Json row = Json::array();
    const auto& scores = by_model.at(m)->scores;
    for (const auto& cond : conditions) {
      auto it = scores.find(cond);
      row.push_back(it == scores.end() ? Json(nullptr) : Json(it->second));
    }
    matrix.push_back(std::move(row));
  }
  return {{"models", Json(std::vector<std::string>(models.begin(), models.end()))},
          {"conditions", Json(std::vector<std::string>(conditions.begin(), conditions.end()))},
          {"matrix", std::move(matrix)}};
}

std::vector<Submission> Leaderboard::Log() const {
  std::shared_lock lock(mutex_);
  return log_;
}

std::vector<std::string> Leaderboard::Datasets() const {
  std::vector<std::string> out;
  for (const auto& [name, ds] : datasets_) out.push_back(name);
  return out;
}

Json Leaderboard::SubmissionJson(const Submission& s) const {
  return {{"id", s.id},
          {"model_name", s.model_name},
          {"dataset", s.dataset},
          {"condition", s.condition},
          {"fold", s.fold},
          {"format", ToString(s.format)},
          {"created_at", s.created_at},
          {"score", ScoreJson(s.score, RequireDataset(s.dataset).taxonomy, false)}};
}

}  // namespace emokit
