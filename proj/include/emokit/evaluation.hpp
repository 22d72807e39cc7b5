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

#ifndef EMOKIT_EVALUATION_HPP_
#define EMOKIT_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emokit/aggregation.hpp"
#include "emokit/corpus.hpp"
#include "emokit/partitioning.hpp"

namespace emokit {

struct MultiHot {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const MultiHot&, const MultiHot&) = default;
};

/// bit_c = 1 iff dist_c > 1/C (strict).
MultiHot Binarize(std::span<const double> dist);
/// Pre-binarized input: entries must be exactly 0 or 1.
MultiHot MultiHotFromValues(std::span<const double> values);

/// Per-class true positive / false positive / false negative counts.
/// Merging is exact, so shards and folds can be counted independently.
struct ConfusionCounts {
  std::vector<std::uint64_t> tp, fp, fn;

  explicit ConfusionCounts(std::size_t num_classes = 0)
      : tp(num_classes), fp(num_classes), fn(num_classes) {}
  void Add(const MultiHot& pred, const MultiHot& gold);
  void Merge(const ConfusionCounts& other);
  std::size_t num_classes() const { return tp.size(); }
};

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalResult {
  double macro_f1 = 0.0;
  std::vector<ClassScore> per_class;
  std::size_t n_samples = 0;
  ConfusionCounts counts;
};

/// Zero denominators yield 0 for precision, recall and F1.
EvalResult ScoreCounts(const ConfusionCounts& counts, std::size_t n_samples);
/// Throws kDimension on length or width mismatch.
EvalResult MacroF1(std::span<const MultiHot> preds, std::span<const MultiHot> golds);

enum class PredictionFormat { kDistribution, kMultiHot };
PredictionFormat ParsePredictionFormat(std::string_view name);
std::string_view ToString(PredictionFormat format);

/// Scores predictions against gold labels on `subset` (all non-dropped gold
/// records when empty). Dropped gold records are skipped. Every scored
/// utterance must have exactly one prediction; predictions outside the
/// scored set are rejected. The CLI and the leaderboard both go through here.
EvalResult ScorePredictions(std::span<const PredictionRecord> predictions,
                            std::span<const LabelRecord> gold,
                            const EmotionTaxonomy& taxonomy,
                            const std::optional<std::vector<std::string>>& subset,
                            PredictionFormat format = PredictionFormat::kDistribution);

enum class FoldCombine { kMean, kPool };

/// kMean averages macro-F1 and per-class scores over folds; kPool merges
/// confusion counts and scores once.
EvalResult CombineFolds(std::span<const EvalResult> folds, FoldCombine mode);

/// Evaluation report JSON: {"dataset", "fold", "macro_f1", "per_class":
/// [{"class", "precision", "recall", "f1"}], "n_samples"}.
Json ReportJson(const EvalResult& result, const EmotionTaxonomy& taxonomy,
                const std::string& dataset, std::optional<int> fold);

/// 100 * (improved - baseline) / baseline. Throws for baseline <= 0.
double RelativeGain(double baseline, double improved);

/// Concordance correlation coefficient with population moments. Throws
/// kInvalidArgument for mismatched or short inputs, kUnscorable when the
/// denominator vanishes.
double Ccc(std::span<const double> x, std::span<const double> y);

}  // namespace emokit

#endif  // EMOKIT_EVALUATION_HPP_
