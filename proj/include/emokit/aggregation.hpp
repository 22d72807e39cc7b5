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

#ifndef EMOKIT_AGGREGATION_HPP_
#define EMOKIT_AGGREGATION_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emokit/corpus.hpp"

namespace emokit {

/// Label instances per class, in taxonomy order. A rater who selects k
/// emotions contributes k instances.
struct VoteCounts {
  std::vector<int> counts;  // label instances per class
  int total = 0;            // sum of counts
  int raters = 0;           // raters who selected at least one class
};

/// Throws kUnscorable when no vote selects a class (typed description only).
VoteCounts CountVotes(const UtteranceAnnotations& utt, const EmotionTaxonomy& taxonomy);

struct SingleLabel {
  std::size_t class_index;
  friend bool operator==(const SingleLabel&, const SingleLabel&) = default;
};
struct DistributionLabel {
  std::vector<double> values;
  friend bool operator==(const DistributionLabel&, const DistributionLabel&) = default;
};
struct DroppedLabel {
  std::string reason;
  friend bool operator==(const DroppedLabel&, const DroppedLabel&) = default;
};
using Label = std::variant<SingleLabel, DistributionLabel, DroppedLabel>;

inline constexpr std::string_view kAmbiguousMajority = "ambiguous majority";
inline constexpr std::string_view kNoMajority = "no majority";
inline constexpr std::string_view kPluralityTie = "plurality tie";
inline constexpr std::string_view kAwaitingRelabel = "awaiting relabel";

// Majority rule: a class must be chosen by more than half of the raters.
// With multi-select votes several classes can pass; the sample is dropped.
Label AggregateMr(const VoteCounts& counts);
// Plurality rule: unique maximum count.
Label AggregatePr(const VoteCounts& counts);
// All-inclusive rule: normalized instance counts; never drops.
Label AggregateAr(const VoteCounts& counts);

/// q = (1 - epsilon) * p + epsilon / C. Requires epsilon in [0, 1).
std::vector<double> Smooth(std::span<const double> dist, double epsilon);

struct LabelRecord {
  std::string utterance_id;
  Label label;
  // For a smoothed single label the smoothed one-hot lives here.
  std::vector<double> smoothed_single;
  bool smoothed = false;

  bool IsDropped() const { return std::holds_alternative<DroppedLabel>(label); }
  /// Distribution this record stands for when scored (one-hot for single,
  /// smoothed one-hot when present). Empty for dropped records.
  std::vector<double> TargetDistribution(std::size_t num_classes) const;
  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

enum class Rule { kMr, kPr, kAr };
Rule ParseRule(std::string_view name);
std::string_view ToString(Rule rule);

struct AggregationOptions {
  Rule rule = Rule::kAr;
  double epsilon = 0.05;       // applied to AR distributions
  bool smooth_single = false;  // also smooth MR/PR one-hots
};

/// Typed-description-only utterances are emitted as dropped with reason
/// kAwaitingRelabel so the relabel step can fill them in.
LabelRecord AggregateUtterance(const UtteranceAnnotations& utt,
                               const EmotionTaxonomy& taxonomy,
                               const AggregationOptions& options);
std::vector<LabelRecord> AggregateCorpus(std::span<const UtteranceAnnotations> corpus,
                                         const EmotionTaxonomy& taxonomy,
                                         const AggregationOptions& options);

struct RuleLoss {
  Rule rule;
  std::size_t dropped = 0;
  std::size_t total = 0;
  double ratio = 0.0;
};

struct DataLossReport {
  std::vector<RuleLoss> rules;  // MR, PR, AR
  std::size_t routed_to_relabel = 0;

  const RuleLoss& For(Rule rule) const;
  Json ToJson() const;
};

/// Ratio of utterances each rule drops. Typed-description-only utterances
/// are counted as routed, not as part of any denominator.
DataLossReport ComputeDataLoss(std::span<const UtteranceAnnotations> corpus,
                               const EmotionTaxonomy& taxonomy);

// LabelRecord JSONL: {"utterance_id", "kind", "class", "distribution",
// "smoothed", "reason"}.
Json ToJson(const LabelRecord& rec, const EmotionTaxonomy& taxonomy);
LabelRecord LabelFromJson(const Json& j, const EmotionTaxonomy& taxonomy);
std::vector<LabelRecord> LoadLabels(const std::filesystem::path& path,
                                    const EmotionTaxonomy& taxonomy);
std::vector<LabelRecord> ParseLabels(std::istream& in, const EmotionTaxonomy& taxonomy,
                                     const std::string& source = "<stream>");
std::string SerializeLabels(std::span<const LabelRecord> labels,
                            const EmotionTaxonomy& taxonomy);

}  // namespace emokit

#endif  // EMOKIT_AGGREGATION_HPP_
