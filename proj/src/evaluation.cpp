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

#include "emokit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "emokit/error.hpp"

namespace emokit {

MultiHot Binarize(std::span<const double> dist) {
  const double threshold = 1.0 / static_cast<double>(dist.size());
  MultiHot m;
  m.bits.reserve(dist.size());
  for (double p : dist) m.bits.push_back(p > threshold ? 1 : 0);
  return m;
}

MultiHot MultiHotFromValues(std::span<const double> values) {
  MultiHot m;
  m.bits.reserve(values.size());
  for (double v : values) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "multi-hot entries must be 0 or 1");
    }
    m.bits.push_back(v == 1.0 ? 1 : 0);
  }
  return m;
}

void ConfusionCounts::Add(const MultiHot& pred, const MultiHot& gold) {
  if (pred.size() != num_classes() || gold.size() != num_classes()) {
    throw Error(ErrorCode::kDimension, "multi-hot width does not match the class count");
  }
  for (std::size_t c = 0; c < num_classes(); ++c) {
    const bool p = pred.bits[c], g = gold.bits[c];
    if (p && g) ++tp[c];
    if (p && !g) ++fp[c];
    if (!p && g) ++fn[c];
  }
}

void ConfusionCounts::Merge(const ConfusionCounts& other) {
  if (other.num_classes() != num_classes()) {
    throw Error(ErrorCode::kDimension, "cannot merge confusion counts of different widths");
  }
  for (std::size_t c = 0; c < num_classes(); ++c) {
    tp[c] += other.tp[c];
    fp[c] += other.fp[c];
    fn[c] += other.fn[c];
  }
}

namespace {

double SafeRatio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalResult ScoreCounts(const ConfusionCounts& counts, std::size_t n_samples) {
  EvalResult r;
  r.counts = counts;
  r.n_samples = n_samples;
  double sum = 0.0;
  for (std::size_t c = 0; c < counts.num_classes(); ++c) {
    ClassScore s;
    s.precision = SafeRatio(counts.tp[c], counts.tp[c] + counts.fp[c]);
    s.recall = SafeRatio(counts.tp[c], counts.tp[c] + counts.fn[c]);
    const double pr = s.precision + s.recall;
    s.f1 = pr == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / pr;
    sum += s.f1;
    r.per_class.push_back(s);
  }
  r.macro_f1 = counts.num_classes() == 0 ? 0.0 : sum / static_cast<double>(counts.num_classes());
  return r;
}

EvalResult MacroF1(std::span<const MultiHot> preds, std::span<const MultiHot> golds) {
  if (preds.size() != golds.size()) {
    throw Error(ErrorCode::kDimension, "predictions and gold labels differ in length");
  }
  if (golds.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to score");
  ConfusionCounts counts(golds.front().size());
  for (std::size_t i = 0; i < golds.size(); ++i) counts.Add(preds[i], golds[i]);
  return ScoreCounts(counts, golds.size());
}

PredictionFormat ParsePredictionFormat(std::string_view name) {
  if (name == "distribution") return PredictionFormat::kDistribution;
  if (name == "multihot") return PredictionFormat::kMultiHot;
  throw Error(ErrorCode::kInvalidArgument, "unknown prediction format \"" + std::string(name) + "\"");
}

std::string_view ToString(PredictionFormat format) {
  return format == PredictionFormat::kDistribution ? "distribution" : "multihot";
}

EvalResult ScorePredictions(std::span<const PredictionRecord> predictions,
                            std::span<const LabelRecord> gold, const EmotionTaxonomy& taxonomy,
                            const std::optional<std::vector<std::string>>& subset,
                            PredictionFormat format) {
  const std::size_t num_classes = taxonomy.size();
  std::unordered_map<std::string, const LabelRecord*> gold_by_id;
  for (const auto& g : gold) gold_by_id.emplace(g.utterance_id, &g);

  std::set<std::string> allowed;
  if (subset) {
    for (const auto& id : *subset) {
      if (!gold_by_id.count(id)) {
        throw Error(ErrorCode::kNotFound, "no gold label for utterance \"" + id + "\"");
      }
      allowed.insert(id);
    }
  } else {
    for (const auto& g : gold) allowed.insert(g.utterance_id);
  }

  std::unordered_map<std::string, const PredictionRecord*> pred_by_id;
  std::vector<std::string> unexpected;
  for (const auto& p : predictions) {
    ValidateDistributionShape(p.distribution, num_classes,
                              "prediction for \"" + p.utterance_id + "\"");
    if (!allowed.count(p.utterance_id)) {
      unexpected.push_back(p.utterance_id);
    } else if (!pred_by_id.emplace(p.utterance_id, &p).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate prediction for \"" + p.utterance_id + "\"");
    }
  }
  if (!unexpected.empty()) {
    std::sort(unexpected.begin(), unexpected.end());
    throw Error(ErrorCode::kValidation,
                "prediction for utterance \"" + unexpected.front() + "\" outside the scored set",
                {{"unexpected", unexpected}});
  }

  ConfusionCounts counts(num_classes);
  std::size_t n = 0;
  std::vector<std::string> missing;
  for (const auto& id : allowed) {
    const LabelRecord& g = *gold_by_id.at(id);
    if (g.IsDropped()) continue;
    auto it = pred_by_id.find(id);
    if (it == pred_by_id.end()) {
      missing.push_back(id);
      continue;
    }
    const MultiHot gold_bits = Binarize(g.TargetDistribution(num_classes));
    const auto& dist = it->second->distribution;
    const MultiHot pred_bits =
        format == PredictionFormat::kDistribution ? Binarize(dist) : MultiHotFromValues(dist);
    counts.Add(pred_bits, gold_bits);
    ++n;
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kValidation,
                "missing prediction for utterance \"" + missing.front() + "\"",
                {{"missing", missing}});
  }
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "no scorable utterances");
  return ScoreCounts(counts, n);
}

EvalResult CombineFolds(std::span<const EvalResult> folds, FoldCombine mode) {
  if (folds.empty()) throw Error(ErrorCode::kInvalidArgument, "no folds to combine");
  const std::size_t num_classes = folds.front().per_class.size();
  ConfusionCounts merged(num_classes);
  std::size_t n = 0;
  for (const auto& f : folds) {
    merged.Merge(f.counts);
    n += f.n_samples;
  }
  if (mode == FoldCombine::kPool) return ScoreCounts(merged, n);

  EvalResult r;
  r.counts = merged;
  r.n_samples = n;
  r.per_class.assign(num_classes, {});
  const double k = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    r.macro_f1 += f.macro_f1;
    for (std::size_t c = 0; c < num_classes; ++c) {
      r.per_class[c].precision += f.per_class[c].precision;
      r.per_class[c].recall += f.per_class[c].recall;
      r.per_class[c].f1 += f.per_class[c].f1;
    }
  }
  r.macro_f1 /= k;
  for (auto& s : r.per_class) {
    s.precision /= k;
    s.recall /= k;
    s.f1 /= k;
  }
  return r;
}

Json ReportJson(const EvalResult& result, const EmotionTaxonomy& taxonomy,
                const std::string& dataset, std::optional<int> fold) {
  Json per_class = Json::array();
  for (std::size_t c = 0; c < result.per_class.size(); ++c) {
    const auto& s = result.per_class[c];
    per_class.push_back(
        {{"class", taxonomy[c]}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
  }
  return {{"dataset", dataset},
          {"fold", fold ? Json(*fold) : Json(nullptr)},
          {"macro_f1", result.macro_f1},
          {"per_class", per_class},
          {"n_samples", result.n_samples}};
}

double RelativeGain(double baseline, double improved) {
  if (!(baseline > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "relative gain needs a positive baseline");
  }
  return 100.0 * (improved - baseline) / baseline;
}

double Ccc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "CCC inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "CCC needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cov += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cov /= n;
  const double denom = vx + vy + (mx - my) * (mx - my);
  if (denom == 0.0) throw Error(ErrorCode::kUnscorable, "CCC is undefined for identical constants");
  return 2.0 * cov / denom;
}

}  // namespace emokit
