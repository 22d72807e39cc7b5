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

#ifndef EMOKIT_CORPUS_HPP_
#define EMOKIT_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emokit/jsonl.hpp"

namespace emokit {

/// Ordered list of emotion classes. The order fixes the index of every
/// class in label, prediction and multi-hot vectors.
class EmotionTaxonomy {
 public:
  /// Throws kInvalidArgument if fewer than 2 classes or duplicate names.
  EmotionTaxonomy(std::string name, std::vector<std::string> classes);

  /// The 8-class primary taxonomy: angry, sad, disgust, contempt, fear,
  /// neutral, surprise, happy.
  static EmotionTaxonomy PodPrimary();
  /// A shipped taxonomy by name ("pod-primary").
  static EmotionTaxonomy Builtin(std::string_view name);
  static EmotionTaxonomy FromJson(const Json& j);
  /// Accepts a config file path or the name of a shipped taxonomy.
  static EmotionTaxonomy Load(const std::string& path_or_name);

  const std::string& name() const { return name_; }
  std::span<const std::string> classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  const std::string& operator[](std::size_t i) const { return classes_[i]; }

  std::optional<std::size_t> IndexOf(std::string_view cls) const;
  /// Throws kUnknownClass.
  std::size_t RequireIndex(std::string_view cls) const;

  Json ToJson() const;

  friend bool operator==(const EmotionTaxonomy&, const EmotionTaxonomy&) = default;

 private:
  std::string name_;
  std::vector<std::string> classes_;
};

struct RaterVote {
  std::string rater_id;
  std::vector<std::string> emotions;  // distinct names, selection order kept
  std::optional<std::string> typed_description;

  bool HasEmotions() const { return !emotions.empty(); }
  bool HasDescription() const {
    return typed_description && !typed_description->empty();
  }
  friend bool operator==(const RaterVote&, const RaterVote&) = default;
};

struct UtteranceAnnotations {
  std::string utterance_id;
  std::string dataset;
  std::string speaker_id;
  std::optional<std::string> dyad_id;
  std::vector<RaterVote> votes;

  bool HasAnyEmotion() const;
  bool HasAnyDescription() const;
  friend bool operator==(const UtteranceAnnotations&,
                         const UtteranceAnnotations&) = default;
};

struct PredictionRecord {
  std::string utterance_id;
  std::vector<double> distribution;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// Annotation JSONL. Every line is validated against the taxonomy; errors
// carry source and line number.
UtteranceAnnotations AnnotationsFromJson(const Json& j, const EmotionTaxonomy& taxonomy);
Json ToJson(const UtteranceAnnotations& utt);
std::vector<UtteranceAnnotations> ParseAnnotations(std::istream& in,
                                                   const EmotionTaxonomy& taxonomy,
                                                   const std::string& source = "<stream>");
std::vector<UtteranceAnnotations> LoadAnnotations(const std::filesystem::path& path,
                                                  const EmotionTaxonomy& taxonomy);
std::string SerializeAnnotations(std::span<const UtteranceAnnotations> utts);

// Prediction JSONL: {"utterance_id", "distribution": [C floats]}.
PredictionRecord PredictionFromJson(const Json& j, const EmotionTaxonomy& taxonomy);
Json ToJson(const PredictionRecord& rec);
std::vector<PredictionRecord> ParsePredictions(std::istream& in,
                                               const EmotionTaxonomy& taxonomy,
                                               const std::string& source = "<stream>");
std::vector<PredictionRecord> LoadPredictions(const std::filesystem::path& path,
                                              const EmotionTaxonomy& taxonomy);
std::string SerializePredictions(std::span<const PredictionRecord> preds);

/// Throws kDimension / kInvalidArgument unless `v` has `dims` finite,
/// non-negative entries.
void ValidateDistributionShape(std::span<const double> v, std::size_t dims,
                               std::string_view what);

}  // namespace emokit

#endif  // EMOKIT_CORPUS_HPP_
