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

#include "emokit/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "emokit/error.hpp"

namespace emokit {

VoteCounts CountVotes(const UtteranceAnnotations& utt, const EmotionTaxonomy& taxonomy) {
  VoteCounts vc;
  vc.counts.assign(taxonomy.size(), 0);
  for (const auto& vote : utt.votes) {
    if (!vote.emotions.empty()) ++vc.raters;
    for (const auto& e : vote.emotions) {
      ++vc.counts[taxonomy.RequireIndex(e)];
      ++vc.total;
    }
  }
  if (vc.total == 0) {
    throw Error(ErrorCode::kUnscorable, "utterance \"" + utt.utterance_id +
                                            "\" has typed descriptions only; relabel it first",
                {{"utterance_id", utt.utterance_id}});
  }
  return vc;
}

namespace {

void RequireVotes(const VoteCounts& counts) {
  if (counts.total < 1) throw Error(ErrorCode::kInvalidArgument, "vote counts are empty");
  if (counts.raters < 1 || counts.raters > counts.total) {
    throw Error(ErrorCode::kInvalidArgument, "rater count must lie in [1, total]");
  }
}

}  // namespace

Label AggregateMr(const VoteCounts& counts) {
  RequireVotes(counts);
  std::optional<std::size_t> winner;
  std::size_t over_half = 0;
  for (std::size_t c = 0; c < counts.counts.size(); ++c) {
    // more than half of the raters chose class c
    if (2 * counts.counts[c] > counts.raters) {
      ++over_half;
      winner = c;
    }
  }
  if (over_half == 1) return SingleLabel{*winner};
  if (over_half > 1) return DroppedLabel{std::string(kAmbiguousMajority)};
  return DroppedLabel{std::string(kNoMajority)};
}

Label AggregatePr(const VoteCounts& counts) {
  RequireVotes(counts);
  const auto max_it = std::max_element(counts.counts.begin(), counts.counts.end());
  if (std::count(counts.counts.begin(), counts.counts.end(), *max_it) > 1) {
    return DroppedLabel{std::string(kPluralityTie)};
  }
  return SingleLabel{static_cast<std::size_t>(max_it - counts.counts.begin())};
}

Label AggregateAr(const VoteCounts& counts) {
  RequireVotes(counts);
  DistributionLabel d;
  d.values.reserve(counts.counts.size());
  const double total = counts.total;
  for (int n : counts.counts) d.values.push_back(n / total);
  return d;
}

std::vector<double> Smooth(std::span<const double> dist, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing epsilon must lie in [0, 1)");
  }
  const double uniform = epsilon / static_cast<double>(dist.size());
  std::vector<double> out;
  out.reserve(dist.size());
  for (double p : dist) out.push_back((1.0 - epsilon) * p + uniform);
  return out;
}

std::vector<double> LabelRecord::TargetDistribution(std::size_t num_classes) const {
  if (const auto* s = std::get_if<SingleLabel>(&label)) {
    if (!smoothed_single.empty()) return smoothed_single;
    std::vector<double> one_hot(num_classes, 0.0);
    one_hot.at(s->class_index) = 1.0;
    return one_hot;
  }
  if (const auto* d = std::get_if<DistributionLabel>(&label)) return d->values;
  return {};
}

Rule ParseRule(std::string_view name) {
  if (name == "mr") return Rule::kMr;
  if (name == "pr") return Rule::kPr;
  if (name == "ar") return Rule::kAr;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation rule \"" + std::string(name) + "\"");
}

std::string_view ToString(Rule rule) {
  switch (rule) {
    case Rule::kMr: return "mr";
    case Rule::kPr: return "pr";
    case Rule::kAr: return "ar";
  }
  return "?";
}

LabelRecord AggregateUtterance(const UtteranceAnnotations& utt, const EmotionTaxonomy& taxonomy,
                               const AggregationOptions& options) {
  LabelRecord rec;
  rec.utterance_id = utt.utterance_id;
  if (!utt.HasAnyEmotion()) {
    rec.label = DroppedLabel{std::string(kAwaitingRelabel)};
    return rec;
  }
  const VoteCounts counts = CountVotes(utt, taxonomy);
  switch (options.rule) {
    case Rule::kMr: rec.label = AggregateMr(counts); break;
    case Rule::kPr: rec.label = AggregatePr(counts); break;
    case Rule::kAr: rec.label = AggregateAr(counts); break;
  }
  if (options.epsilon > 0.0) {
    if (auto* d = std::get_if<DistributionLabel>(&rec.label)) {
      d->values = Smooth(d->values, options.epsilon);
      rec.smoothed = true;
    } else if (options.smooth_single && std::holds_alternative<SingleLabel>(rec.label)) {
      rec.smoothed_single = Smooth(rec.TargetDistribution(taxonomy.size()), options.epsilon);
      rec.smoothed = true;
    }
  }
  return rec;
}

std::vector<LabelRecord> AggregateCorpus(std::span<const UtteranceAnnotations> corpus,
                                         const EmotionTaxonomy& taxonomy,
                                         const AggregationOptions& options) {
  std::vector<LabelRecord> out;
  out.reserve(corpus.size());
  for (const auto& utt : corpus) out.push_back(AggregateUtterance(utt, taxonomy, options));
  return out;
}

const RuleLoss& DataLossReport::For(Rule rule) const {
  for (const auto& r : rules) {
    if (r.rule == rule) return r;
  }
  throw Error(ErrorCode::kNotFound, "rule missing from report");
}

Json DataLossReport::ToJson() const {
  Json rows = Json::array();
  for (const auto& r : rules) {
    rows.push_back({{"rule", ToString(r.rule)},
                    {"dropped", r.dropped},
                    {"total", r.total},
                    {"ratio", r.ratio}});
  }
  return {{"rules", rows}, {"routed_to_relabel", routed_to_relabel}};
}

DataLossReport ComputeDataLoss(std::span<const UtteranceAnnotations> corpus,
                               const EmotionTaxonomy& taxonomy) {
  DataLossReport report;
  report.rules = {{Rule::kMr}, {Rule::kPr}, {Rule::kAr}};
  for (const auto& utt : corpus) {
    if (!utt.HasAnyEmotion()) {
      ++report.routed_to_relabel;
      continue;
    }
    const VoteCounts counts = CountVotes(utt, taxonomy);
    const Label labels[] = {AggregateMr(counts), AggregatePr(counts), AggregateAr(counts)};
    for (std::size_t i = 0; i < 3; ++i) {
      ++report.rules[i].total;
      if (std::holds_alternative<DroppedLabel>(labels[i])) ++report.rules[i].dropped;
    }
  }
  for (auto& r : report.rules) {
    r.ratio = r.total == 0 ? 0.0 : static_cast<double>(r.dropped) / static_cast<double>(r.total);
  }
  return report;
}

Json ToJson(const LabelRecord& rec, const EmotionTaxonomy& taxonomy) {
  Json j = {{"utterance_id", rec.utterance_id},
            {"kind", nullptr},
            {"class", nullptr},
            {"distribution", nullptr},
            {"smoothed", rec.smoothed},
            {"reason", nullptr}};
  if (const auto* s = std::get_if<SingleLabel>(&rec.label)) {
    j["kind"] = "single";
    j["class"] = taxonomy[s->class_index];
    if (!rec.smoothed_single.empty()) j["distribution"] = rec.smoothed_single;
  } else if (const auto* d = std::get_if<DistributionLabel>(&rec.label)) {
    j["kind"] = "distribution";
    j["distribution"] = d->values;
  } else {
    j["kind"] = "dropped";
    j["reason"] = std::get<DroppedLabel>(rec.label).reason;
  }
  return j;
}

namespace {

void RequireUnitSum(std::span<const double> v, const std::string& id) {
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kValidation,
                "distribution for \"" + id + "\" sums to " + std::to_string(sum));
  }
}

}  // namespace

LabelRecord LabelFromJson(const Json& j, const EmotionTaxonomy& taxonomy) {
  LabelRecord rec;
  rec.utterance_id = RequireString(j, "utterance_id");
  const std::string kind = RequireString(j, "kind");
  if (auto it = j.find("smoothed"); it != j.end() && !it->is_null()) {
    rec.smoothed = it->get<bool>();
  }
  const bool has_dist = j.contains("distribution") && !j["distribution"].is_null();
  if (kind == "single") {
    const auto cls = OptionalString(j, "class");
    if (!cls) throw Error(ErrorCode::kParse, "single label without \"class\"");
    rec.label = SingleLabel{taxonomy.RequireIndex(*cls)};
    if (has_dist) {
      rec.smoothed_single = RequireNumberArray(j, "distribution");
      ValidateDistributionShape(rec.smoothed_single, taxonomy.size(), "label distribution");
      RequireUnitSum(rec.smoothed_single, rec.utterance_id);
    }
  } else if (kind == "distribution") {
    if (!has_dist) throw Error(ErrorCode::kParse, "distribution label without values");
    DistributionLabel d{RequireNumberArray(j, "distribution")};
    ValidateDistributionShape(d.values, taxonomy.size(), "label distribution");
    RequireUnitSum(d.values, rec.utterance_id);
    rec.label = std::move(d);
  } else if (kind == "dropped") {
    rec.label = DroppedLabel{OptionalString(j, "reason").value_or("")};
  } else {
    throw Error(ErrorCode::kParse, "unknown label kind \"" + kind + "\"");
  }
  return rec;
}

std::vector<LabelRecord> ParseLabels(std::istream& in, const EmotionTaxonomy& taxonomy,
                                     const std::string& source) {
  std::vector<LabelRecord> out;
  std::unordered_set<std::string> seen;
  ForEachJsonLine(in, source, [&](const Json& j, std::size_t) {
    LabelRecord rec = LabelFromJson(j, taxonomy);
    if (!seen.insert(rec.utterance_id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate label for \"" + rec.utterance_id + "\"");
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<LabelRecord> LoadLabels(const std::filesystem::path& path,
                                    const EmotionTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return ParseLabels(in, taxonomy, path.string());
}

std::string SerializeLabels(std::span<const LabelRecord> labels, const EmotionTaxonomy& taxonomy) {
  std::vector<Json> lines;
  lines.reserve(labels.size());
  for (const auto& l : labels) lines.push_back(ToJson(l, taxonomy));
  return ToJsonLines(lines);
}

}  // namespace emokit
