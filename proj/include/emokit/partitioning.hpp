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

#ifndef EMOKIT_PARTITIONING_HPP_
#define EMOKIT_PARTITIONING_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emokit/corpus.hpp"

namespace emokit {

enum class Split { kTrain, kDev, kTest };
inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kDev, Split::kTest};
std::string_view ToString(Split split);

/// Which utterance field decides group membership.
enum class GroupKey { kDyad, kSpeaker };

struct SpeakerGroup {
  std::string name;
  std::vector<std::string> members;  // dyad ids or speaker ids
};

struct FoldSpec {
  std::vector<std::string> train;  // group names
  std::vector<std::string> dev;
  std::vector<std::string> test;

  const std::vector<std::string>& Groups(Split split) const;
};

struct PartitionScheme {
  std::string name;
  GroupKey key = GroupKey::kDyad;
  std::vector<SpeakerGroup> groups;
  std::vector<FoldSpec> folds;

  static PartitionScheme FromJson(const Json& j);
  Json ToJson() const;
};

/// Structural problems: unknown group references, members shared by two
/// groups, a group used by more than one split of a fold. Empty when valid.
std::vector<std::string> SchemeProblems(const PartitionScheme& scheme);
/// Throws kValidation listing SchemeProblems.
void ValidateScheme(const PartitionScheme& scheme);

std::vector<std::string> BuiltinSchemeNames();
/// iemocap-5fold, improv-6fold, cremad-5fold, nnime-5fold (and the
/// as-printed iemocap-5fold-printed, which does not validate). Throws
/// kNotFound for other names.
PartitionScheme BuiltinScheme(std::string_view name);
PartitionScheme LoadScheme(const std::filesystem::path& path);

/// Fixed released split as a one-fold speaker-keyed scheme. File:
/// {"name", "train": [speaker ids], "dev": [...], "test": [...]}.
PartitionScheme LoadFixedSplit(const std::filesystem::path& path);

struct FoldAssignment {
  std::map<std::string, Split> roles;  // utterance_id -> split

  std::vector<std::string> Ids(Split split) const;  // sorted
};

struct PartitionPlan {
  std::string scheme;
  std::vector<FoldAssignment> folds;

  static PartitionPlan FromJson(const Json& j);
  static PartitionPlan Load(const std::filesystem::path& path);
  /// {"scheme", "folds": [{"train": [...], "dev": [...], "test": [...]}]}
  /// with sorted ids; identical plans serialize to identical bytes.
  Json ToJson() const;
  std::string Serialize() const;
};

/// Routes every utterance to the split holding its group in each fold;
/// groups a fold does not use leave their utterances out of that fold.
/// Throws kValidation for unmapped dyads/speakers and invalid schemes.
PartitionPlan Assign(const PartitionScheme& scheme,
                     std::span<const UtteranceAnnotations> corpus);

struct LeakageViolation {
  std::size_t fold;  // 1-based
  std::string kind;  // "speaker" or "dyad"
  std::string subject;
  std::vector<Split> splits;
};

struct LeakageReport {
  std::vector<LeakageViolation> violations;
  bool ok() const { return violations.empty(); }
  Json ToJson() const;
};

/// Per fold, speakers and dyads must each sit in a single split. Throws
/// kValidation if the plan references utterances missing from the corpus.
LeakageReport CheckLeakage(const PartitionPlan& plan,
                           std::span<const UtteranceAnnotations> corpus);

}  // namespace emokit

#endif  // EMOKIT_PARTITIONING_HPP_
