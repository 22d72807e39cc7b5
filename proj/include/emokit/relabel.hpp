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

#ifndef EMOKIT_RELABEL_HPP_
#define EMOKIT_RELABEL_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emokit/aggregation.hpp"
#include "emokit/chat_transport.hpp"
#include "emokit/corpus.hpp"

namespace emokit {

inline constexpr std::size_t kRelabelClasses = 8;
inline constexpr std::size_t kMaxRelabelBatch = 30;
inline constexpr double kResponseSumTolerance = 1e-2;
inline constexpr double kModifiedTolerance = 1e-6;

struct RelabelItem {
  int index = 0;  // 1-based position inside its batch
  std::string descriptions;
  std::vector<double> reference;  // pod-primary order
};

struct RelabelResult {
  int index = 0;
  std::vector<double> adjusted;  // renormalized to sum 1
  std::string reason;
  bool modified = false;
};

struct ClientConfig {
  std::string model = "gpt-4-0125-preview";
  double temperature = 0.0;
  int seed = 7;
  bool json_mode = true;
  std::size_t batch_size = kMaxRelabelBatch;
  double cost_per_sample_usd = 0.0045;
  int max_attempts = 3;
  std::size_t max_in_flight = 1;

  void Validate() const;
};

/// System prompt (version 14), byte-identical on every call.
std::string_view BuildPrompt();

/// Backslash-escapes '\\', '#' and '|' so they cannot break the wire format.
std::string EscapeDescription(std::string_view text);
std::string UnescapeDescription(std::string_view text);

/// Shortest round-trip fixed notation with at least one decimal place.
std::string FormatProbability(double p);

/// "descriptions#d1,...,d8" per item, items joined by '|'. Throws for
/// empty or oversized batches and references that are not 8-dim.
std::string EncodeBatch(std::span<const RelabelItem> items);
/// Inverse of EncodeBatch; indices are assigned 1..n.
std::vector<RelabelItem> DecodeBatch(std::string_view wire);

struct FlaggedItem {
  int index = 0;
  std::string problem;
};

struct ParsedResponse {
  std::vector<RelabelResult> accepted;
  std::vector<FlaggedItem> flagged;  // answered but invalid; retry these
  std::vector<int> missing;
  std::vector<int> extra;
};

/// Accepts a JSON object keyed by index, an object wrapping an array of
/// results with an "index" field, or a bare array. Single-quoted strings
/// are tolerated. Throws kParse only when the payload is not JSON at all.
ParsedResponse ParseResponsePartial(std::string_view raw, std::span<const RelabelItem> batch);
/// Like ParseResponsePartial but throws kValidation naming missing or
/// extra indices.
ParsedResponse ParseResponse(std::string_view raw, std::span<const RelabelItem> batch);

/// One utterance to relabel.
struct RelabelRequest {
  std::string utterance_id;
  std::string descriptions;       // typed descriptions joined by ','
  std::vector<double> reference;  // AR distribution, or uniform without votes
};

/// Utterances carrying a non-empty typed description. The taxonomy must
/// have the pod-primary class order.
std::vector<RelabelRequest> CollectRelabelRequests(std::span<const UtteranceAnnotations> corpus,
                                                   const EmotionTaxonomy& taxonomy);

struct RelabelRecord {
  std::string utterance_id;
  std::vector<double> reference;
  std::vector<double> adjusted;
  std::string reason;
  bool modified = false;
  bool fallback = false;  // gave up after max attempts; adjusted == reference
};

Json ToJson(const RelabelRecord& rec);
RelabelRecord RelabelRecordFromJson(const Json& j);
std::vector<RelabelRecord> LoadRelabelRecords(const std::filesystem::path& path);
std::string SerializeRelabelRecords(std::span<const RelabelRecord> records);

/// Batches pending requests, sends them, validates the answers and retries
/// unanswered or invalid items. Items still failing after max_attempts fall
/// back to their reference with a warning.
class RelabelPipeline {
 public:
  RelabelPipeline(ChatTransport& transport, ClientConfig config);

  /// Requests whose utterance_id already appears in `done` are not sent
  /// again; the returned list holds `done` followed by the new records in
  /// request order.
  std::vector<RelabelRecord> Run(std::span<const RelabelRequest> requests,
                                 std::span<const RelabelRecord> done = {});

  std::size_t requests_sent() const { return requests_sent_; }

 private:
  ChatTransport& transport_;
  ClientConfig config_;
  std::size_t requests_sent_ = 0;
};

struct RelabelStats {
  std::size_t relabeled = 0;
  std::size_t modified = 0;
  std::size_t fallback = 0;
  double modified_fraction = 0.0;

  Json ToJson() const;
};

struct MergeOptions {
  std::optional<double> resmooth_epsilon;  // off by default
};

struct MergeOutcome {
  std::vector<LabelRecord> labels;
  RelabelStats stats;
};

/// Replaces the distribution of every relabeled utterance with the adjusted
/// one. Only distribution labels and typed-only placeholders can be
/// replaced; unknown utterances raise kNotFound.
MergeOutcome Merge(std::span<const RelabelRecord> records, std::span<const LabelRecord> labels,
                   const MergeOptions& options = {});

double EstimateCost(std::size_t samples, const ClientConfig& config);

}  // namespace emokit

#endif  // EMOKIT_RELABEL_HPP_
