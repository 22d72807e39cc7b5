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

#ifndef EMOKIT_LEADERBOARD_HPP_
#define EMOKIT_LEADERBOARD_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emokit/aggregation.hpp"
#include "emokit/corpus.hpp"
#include "emokit/evaluation.hpp"
#include "emokit/partitioning.hpp"

namespace emokit {

/// Gold side of one benchmark dataset, as laid out under
/// <data-dir>/datasets/<name>/: taxonomy.json, plan.json and
/// gold/<condition>.jsonl (LabelRecord JSONL, one file per condition).
struct BenchmarkDataset {
  std::string name;
  EmotionTaxonomy taxonomy;
  PartitionPlan plan;
  std::map<std::string, std::vector<LabelRecord>> gold;  // condition -> labels

  static BenchmarkDataset LoadDir(const std::filesystem::path& dir);
};

struct SubmissionMetadata {
  std::string model_name;
  std::string dataset;
  std::string condition;  // may be empty when the dataset has one condition
  std::optional<int> fold;  // 1-based; may be omitted for one-fold plans
  PredictionFormat format = PredictionFormat::kDistribution;

  static SubmissionMetadata FromJson(const Json& j);
};

struct Submission {
  std::string id;
  std::uint64_t sequence = 0;
  std::string idempotency_key;
  std::string payload_hash;
  std::string model_name;
  std::string dataset;
  std::string condition;
  int fold = 1;
  PredictionFormat format = PredictionFormat::kDistribution;
  std::string created_at;  // ISO-8601 UTC
  EvalResult score;

  std::string ConditionKey() const { return dataset + "/" + condition; }
};

struct LeaderboardRow {
  std::string model_name;
  std::map<std::string, double> scores;  // "<dataset>/<condition>" -> macro-F1
  std::map<std::string, std::string> first_submitted;
  double average = 0.0;

  Json ToJson() const;
};

/// Condition score of a model = mean over folds of its latest submission
/// per fold. Pure function of the log, so replaying it rebuilds the board.
std::vector<LeaderboardRow> BuildRows(std::span<const Submission> log);

/// Submission store and scorer. The log at <data-dir>/submissions.jsonl is
/// append-only and the in-memory index is rebuilt from it on construction.
/// Reads may run concurrently; submissions are serialized.
class Leaderboard {
 public:
  using Clock = std::function<std::string()>;

  struct Options {
    Clock clock;  // defaults to the system clock
    std::function<void(const Submission&)> on_scored;  // called after persist
  };

  explicit Leaderboard(std::filesystem::path data_dir);
  Leaderboard(std::filesystem::path data_dir, Options options);

  struct SubmitOutcome {
    Submission submission;
    bool created = false;  // false when the idempotency key was replayed
  };

  /// Validates coverage and dimensions against the declared fold's test
  /// split, scores through ScorePredictions and appends to the log. A
  /// repeated idempotency key with the same payload returns the stored
  /// submission; with a different payload it raises kConflict.
  SubmitOutcome Submit(const Json& metadata, std::string_view predictions_jsonl,
                       const std::optional<std::string>& idempotency_key = std::nullopt);

  /// Rows holding a score for the condition, best first; ties go to the
  /// model that submitted first. Throws kNotFound for unknown datasets.
  std::vector<LeaderboardRow> Rankings(const std::string& dataset,
                                       const std::string& condition = "") const;

  std::optional<Submission> Get(const std::string& id) const;

  /// {"models": [...], "conditions": [...], "matrix": [[f1 | null]]}.
  /// Throws kNotFound naming the first unknown model.
  Json Compare(std::span<const std::string> models) const;

  std::vector<Submission> Log() const;
  std::vector<std::string> Datasets() const;

  /// Public view: metadata and score, never gold labels.
  Json SubmissionJson(const Submission& s) const;

 private:
  const BenchmarkDataset& RequireDataset(const std::string& name) const;
  std::string ResolveCondition(const BenchmarkDataset& ds, const std::string& condition) const;
  void LoadLog();

  std::filesystem::path data_dir_;
  Options options_;
  std::map<std::string, BenchmarkDataset> datasets_;

  mutable std::shared_mutex mutex_;
  std::vector<Submission> log_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::string, std::size_t> by_key_;
};

Json ToJson(const Submission& s, const EmotionTaxonomy& taxonomy);
Submission SubmissionFromJson(const Json& j, const EmotionTaxonomy& taxonomy);

std::string UtcNowIso8601();

/// HTTP front end:
///   POST /v1/submissions            multipart "metadata" + "predictions",
///                                   headers Authorization: Bearer <token>,
///                                   Idempotency-Key
///   GET  /v1/leaderboard/{dataset}?condition=
///   GET  /v1/submissions/{id}
///   GET  /v1/compare?ids=a,b,c
class LeaderboardServer {
 public:
  LeaderboardServer(Leaderboard& board, std::string token);
  ~LeaderboardServer();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  /// Blocks until Stop().
  void Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace emokit

#endif  // EMOKIT_LEADERBOARD_HPP_
