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

#include "emokit/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "emokit/error.hpp"
#include "emokit/resources.hpp"

namespace emokit {

EmotionTaxonomy::EmotionTaxonomy(std::string name, std::vector<std::string> classes)
    : name_(std::move(name)), classes_(std::move(classes)) {
  if (classes_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "taxonomy \"" + name_ + "\" needs at least 2 classes");
  }
  std::set<std::string_view> seen;
  for (const auto& c : classes_) {
    if (c.empty()) throw Error(ErrorCode::kInvalidArgument, "empty class name");
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate class name \"" + c + "\"");
    }
  }
}

EmotionTaxonomy EmotionTaxonomy::PodPrimary() { return Builtin("pod-primary"); }

EmotionTaxonomy EmotionTaxonomy::Builtin(std::string_view name) {
  auto text = resources::Find("taxonomies/" + std::string(name));
  if (!text) throw Error(ErrorCode::kNotFound, "unknown taxonomy \"" + std::string(name) + "\"");
  return FromJson(Json::parse(*text));
}

EmotionTaxonomy EmotionTaxonomy::FromJson(const Json& j) {
  std::string name = RequireString(j, "name");
  const Json& classes = RequireField(j, "classes");
  if (!classes.is_array()) throw Error(ErrorCode::kParse, "\"classes\" must be an array");
  std::vector<std::string> names;
  for (const auto& c : classes) {
    if (!c.is_string()) throw Error(ErrorCode::kParse, "class names must be strings");
    names.push_back(c.get<std::string>());
  }
  return EmotionTaxonomy(std::move(name), std::move(names));
}

EmotionTaxonomy EmotionTaxonomy::Load(const std::string& path_or_name) {
  if (resources::Find("taxonomies/" + path_or_name)) return Builtin(path_or_name);
  try {
    return FromJson(ReadJsonFile(path_or_name));
  } catch (Error& e) {
    if (!e.file()) e.WithLocation(path_or_name);
    throw;
  }
}

std::optional<std::size_t> EmotionTaxonomy::IndexOf(std::string_view cls) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == cls) return i;
  }
  return std::nullopt;
}

std::size_t EmotionTaxonomy::RequireIndex(std::string_view cls) const {
  auto idx = IndexOf(cls);
  if (!idx) {
    throw Error(ErrorCode::kUnknownClass, "unknown emotion class \"" + std::string(cls) +
                                              "\" for taxonomy \"" + name_ + "\"");
  }
  return *idx;
}

Json EmotionTaxonomy::ToJson() const { return {{"name", name_}, {"classes", classes_}}; }

bool UtteranceAnnotations::HasAnyEmotion() const {
  for (const auto& v : votes) {
    if (v.HasEmotions()) return true;
  }
  return false;
}

bool UtteranceAnnotations::HasAnyDescription() const {
  for (const auto& v : votes) {
    if (v.HasDescription()) return true;
  }
  return false;
}

namespace {

RaterVote VoteFromJson(const Json& j, const EmotionTaxonomy& taxonomy) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "vote must be an object");
  RaterVote vote;
  vote.rater_id = RequireString(j, "rater_id");
  const Json& emotions = RequireField(j, "emotions");
  if (!emotions.is_array()) throw Error(ErrorCode::kParse, "\"emotions\" must be an array");
  for (const auto& e : emotions) {
    if (!e.is_string()) throw Error(ErrorCode::kParse, "emotion names must be strings");
    std::string name = e.get<std::string>();
    taxonomy.RequireIndex(name);
    for (const auto& prev : vote.emotions) {
      if (prev == name) {
        throw Error(ErrorCode::kParse, "rater \"" + vote.rater_id + "\" selects \"" + name +
                                           "\" twice");
      }
    }
    vote.emotions.push_back(std::move(name));
  }
  vote.typed_description = OptionalString(j, "typed_description");
  if (!vote.HasEmotions() && !vote.HasDescription()) {
    throw Error(ErrorCode::kParse,
                "rater \"" + vote.rater_id + "\" has neither emotions nor a typed description");
  }
  return vote;
}

}  // namespace

UtteranceAnnotations AnnotationsFromJson(const Json& j, const EmotionTaxonomy& taxonomy) {
  UtteranceAnnotations utt;
  utt.utterance_id = RequireString(j, "utterance_id");
  utt.dataset = RequireString(j, "dataset");
  utt.speaker_id = RequireString(j, "speaker_id");
  utt.dyad_id = OptionalString(j, "dyad_id");
  const Json& votes = RequireField(j, "votes");
  if (!votes.is_array() || votes.empty()) {
    throw Error(ErrorCode::kParse, "\"votes\" must be a non-empty array");
  }
  for (const auto& v : votes) utt.votes.push_back(VoteFromJson(v, taxonomy));
  return utt;
}

Json ToJson(const UtteranceAnnotations& utt) {
  Json votes = Json::array();
  for (const auto& v : utt.votes) {
    votes.push_back({{"rater_id", v.rater_id},
                     {"emotions", v.emotions},
                     {"typed_description",
                      v.typed_description ? Json(*v.typed_description) : Json(nullptr)}});
  }
  return {{"utterance_id", utt.utterance_id},
          {"dataset", utt.dataset},
          {"speaker_id", utt.speaker_id},
          {"dyad_id", utt.dyad_id ? Json(*utt.dyad_id) : Json(nullptr)},
          {"votes", votes}};
}

std::vector<UtteranceAnnotations> ParseAnnotations(std::istream& in,
                                                   const EmotionTaxonomy& taxonomy,
                                                   const std::string& source) {
  std::vector<UtteranceAnnotations> out;
  std::unordered_set<std::string> seen;
  ForEachJsonLine(in, source, [&](const Json& j, std::size_t) {
    UtteranceAnnotations utt = AnnotationsFromJson(j, taxonomy);
    if (!seen.insert(utt.utterance_id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate utterance_id \"" + utt.utterance_id + "\"");
    }
    out.push_back(std::move(utt));
  });
  return out;
}

std::vector<UtteranceAnnotations> LoadAnnotations(const std::filesystem::path& path,
                                                  const EmotionTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return ParseAnnotations(in, taxonomy, path.string());
}

std::string SerializeAnnotations(std::span<const UtteranceAnnotations> utts) {
  std::vector<Json> lines;
  lines.reserve(utts.size());
  for (const auto& u : utts) lines.push_back(ToJson(u));
  return ToJsonLines(lines);
}

void ValidateDistributionShape(std::span<const double> v, std::size_t dims,
                               std::string_view what) {
  if (v.size() != dims) {
    throw Error(ErrorCode::kDimension, std::string(what) + " has " + std::to_string(v.size()) +
                                           " entries, expected " + std::to_string(dims));
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + " has a non-finite entry");
    }
    if (x < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + " has a negative entry");
    }
  }
}

PredictionRecord PredictionFromJson(const Json& j, const EmotionTaxonomy& taxonomy) {
  PredictionRecord rec;
  rec.utterance_id = RequireString(j, "utterance_id");
  rec.distribution = RequireNumberArray(j, "distribution");
  ValidateDistributionShape(rec.distribution, taxonomy.size(),
                            "prediction for \"" + rec.utterance_id + "\"");
  return rec;
}

Json ToJson(const PredictionRecord& rec) {
  return {{"utterance_id", rec.utterance_id}, {"distribution", rec.distribution}};
}

std::vector<PredictionRecord> ParsePredictions(std::istream& in, const EmotionTaxonomy& taxonomy,
                                               const std::string& source) {
  std::vector<PredictionRecord> out;
  std::unordered_set<std::string> seen;
  ForEachJsonLine(in, source, [&](const Json& j, std::size_t) {
    PredictionRecord rec = PredictionFromJson(j, taxonomy);
    if (!seen.insert(rec.utterance_id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate prediction for \"" + rec.utterance_id + "\"");
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<PredictionRecord> LoadPredictions(const std::filesystem::path& path,
                                              const EmotionTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return ParsePredictions(in, taxonomy, path.string());
}

std::string SerializePredictions(std::span<const PredictionRecord> preds) {
  std::vector<Json> lines;
  lines.reserve(preds.size());
  for (const auto& p : preds) lines.push_back(ToJson(p));
  return ToJsonLines(lines);
}

}  // namespace emokit
