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

#include "emokit/partitioning.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "emokit/error.hpp"
#include "emokit/resources.hpp"

namespace emokit {

std::string_view ToString(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

const std::vector<std::string>& FoldSpec::Groups(Split split) const {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kDev: return dev;
    case Split::kTest: return test;
  }
  return train;
}

namespace {

std::vector<std::string> StringList(const Json& j, std::string_view key) {
  const Json& v = RequireField(j, key);
  if (!v.is_array()) throw Error(ErrorCode::kParse, "\"" + std::string(key) + "\" must be an array");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) {
      throw Error(ErrorCode::kParse, "\"" + std::string(key) + "\" must hold strings");
    }
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

PartitionScheme PartitionScheme::FromJson(const Json& j) {
  PartitionScheme s;
  s.name = RequireString(j, "name");
  const std::string key = RequireString(j, "key");
  if (key == "dyad") {
    s.key = GroupKey::kDyad;
  } else if (key == "speaker") {
    s.key = GroupKey::kSpeaker;
  } else {
    throw Error(ErrorCode::kParse, "scheme key must be \"dyad\" or \"speaker\"");
  }
  for (const auto& g : RequireField(j, "groups")) {
    s.groups.push_back({RequireString(g, "name"), StringList(g, "members")});
  }
  for (const auto& f : RequireField(j, "folds")) {
    s.folds.push_back({StringList(f, "train"), StringList(f, "dev"), StringList(f, "test")});
  }
  return s;
}

Json PartitionScheme::ToJson() const {
  Json groups_json = Json::array();
  for (const auto& g : groups) groups_json.push_back({{"name", g.name}, {"members", g.members}});
  Json folds_json = Json::array();
  for (const auto& f : folds) {
    folds_json.push_back({{"train", f.train}, {"dev", f.dev}, {"test", f.test}});
  }
  return {{"name", name},
          {"key", key == GroupKey::kDyad ? "dyad" : "speaker"},
          {"groups", groups_json},
          {"folds", folds_json}};
}

std::vector<std::string> SchemeProblems(const PartitionScheme& scheme) {
  std::vector<std::string> problems;
  if (scheme.folds.empty()) problems.push_back("scheme has no folds");
  std::set<std::string> group_names;
  std::map<std::string, std::string> owner;  // member -> group
  for (const auto& g : scheme.groups) {
    if (!group_names.insert(g.name).second) problems.push_back("duplicate group " + g.name);
    for (const auto& m : g.members) {
      auto [it, inserted] = owner.emplace(m, g.name);
      if (!inserted) {
        problems.push_back("member " + m + " belongs to " + it->second + " and " + g.name);
      }
    }
  }
  for (std::size_t k = 0; k < scheme.folds.size(); ++k) {
    const std::string fold = "fold " + std::to_string(k + 1);
    std::map<std::string, Split> used;
    for (Split split : kAllSplits) {
      for (const auto& g : scheme.folds[k].Groups(split)) {
        if (!group_names.count(g)) {
          problems.push_back(fold + " references unknown group " + g);
          continue;
        }
        auto [it, inserted] = used.emplace(g, split);
        if (!inserted) {
          problems.push_back(fold + ": group " + g + " is in both " +
                             std::string(ToString(it->second)) + " and " +
                             std::string(ToString(split)));
        }
      }
    }
    if (scheme.folds[k].test.empty()) problems.push_back(fold + " has no test group");
  }
  return problems;
}

void ValidateScheme(const PartitionScheme& scheme) {
  auto problems = SchemeProblems(scheme);
  if (!problems.empty()) {
    throw Error(ErrorCode::kValidation,
                "invalid partition scheme \"" + scheme.name + "\": " + problems.front(),
                {{"problems", problems}});
  }
}

std::vector<std::string> BuiltinSchemeNames() {
  return {"iemocap-5fold", "improv-6fold", "cremad-5fold", "nnime-5fold"};
}

PartitionScheme BuiltinScheme(std::string_view name) {
  auto text = resources::Find("schemes/" + std::string(name));
  if (!text) {
    throw Error(ErrorCode::kNotFound, "unknown partition scheme \"" + std::string(name) + "\"");
  }
  return PartitionScheme::FromJson(Json::parse(*text));
}

PartitionScheme LoadScheme(const std::filesystem::path& path) {
  try {
    return PartitionScheme::FromJson(ReadJsonFile(path));
  } catch (Error& e) {
    if (!e.file()) e.WithLocation(path.string());
    throw;
  }
}

PartitionScheme LoadFixedSplit(const std::filesystem::path& path) {
  try {
    const Json j = ReadJsonFile(path);
    PartitionScheme s;
    s.name = RequireString(j, "name");
    s.key = GroupKey::kSpeaker;
    s.groups = {{"train", StringList(j, "train")},
                {"dev", StringList(j, "dev")},
                {"test", StringList(j, "test")}};
    s.folds = {{{"train"}, {"dev"}, {"test"}}};
    return s;
  } catch (Error& e) {
    if (!e.file()) e.WithLocation(path.string());
    throw;
  }
}

std::vector<std::string> FoldAssignment::Ids(Split split) const {
  std::vector<std::string> out;
  for (const auto& [id, s] : roles) {
    if (s == split) out.push_back(id);
  }
  return out;  // std::map keeps ids sorted
}

PartitionPlan PartitionPlan::FromJson(const Json& j) {
  PartitionPlan plan;
  plan.scheme = RequireString(j, "scheme");
  const Json& folds = RequireField(j, "folds");
  if (!folds.is_array()) throw Error(ErrorCode::kParse, "\"folds\" must be an array");
  for (const auto& f : folds) {
    FoldAssignment fold;
    for (Split split : kAllSplits) {
      for (auto& id : StringList(f, ToString(split))) {
        auto [it, inserted] = fold.roles.emplace(id, split);
        if (!inserted) {
          throw Error(ErrorCode::kValidation,
                      "utterance \"" + id + "\" appears twice in fold " +
                          std::to_string(plan.folds.size() + 1));
        }
      }
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

PartitionPlan PartitionPlan::Load(const std::filesystem::path& path) {
  try {
    return FromJson(ReadJsonFile(path));
  } catch (Error& e) {
    if (!e.file()) e.WithLocation(path.string());
    throw;
  }
}

Json PartitionPlan::ToJson() const {
  Json folds_json = Json::array();
  for (const auto& f : folds) {
    folds_json.push_back({{"train", f.Ids(Split::kTrain)},
                          {"dev", f.Ids(Split::kDev)},
                          {"test", f.Ids(Split::kTest)}});
  }
  return {{"scheme", scheme}, {"folds", folds_json}};
}

std::string PartitionPlan::Serialize() const { return ToJson().dump(2) + "\n"; }

PartitionPlan Assign(const PartitionScheme& scheme, std::span<const UtteranceAnnotations> corpus) {
  ValidateScheme(scheme);
  std::unordered_map<std::string, std::string> group_of;
  for (const auto& g : scheme.groups) {
    for (const auto& m : g.members) group_of.emplace(m, g.name);
  }

  std::vector<std::string> unmapped;
  std::vector<const std::string*> groups(corpus.size(), nullptr);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& utt = corpus[i];
    const std::optional<std::string>& member =
        scheme.key == GroupKey::kDyad ? utt.dyad_id : std::optional<std::string>(utt.speaker_id);
    auto it = member ? group_of.find(*member) : group_of.end();
    if (it == group_of.end()) {
      unmapped.push_back(utt.utterance_id);
      continue;
    }
    groups[i] = &it->second;
  }
  if (!unmapped.empty()) {
    const auto& first = corpus[std::find_if(corpus.begin(), corpus.end(), [&](const auto& u) {
                                  return u.utterance_id == unmapped.front();
                                }) - corpus.begin()];
    const std::string what = scheme.key == GroupKey::kDyad
                                 ? "dyad \"" + first.dyad_id.value_or("<none>") + "\""
                                 : "speaker \"" + first.speaker_id + "\"";
    throw Error(ErrorCode::kValidation,
                "utterance \"" + first.utterance_id + "\" has " + what +
                    " which no group of scheme \"" + scheme.name + "\" contains",
                {{"unmapped_utterances", unmapped}});
  }

  PartitionPlan plan;
  plan.scheme = scheme.name;
  for (const auto& spec : scheme.folds) {
    std::unordered_map<std::string, Split> split_of;
    for (Split split : kAllSplits) {
      for (const auto& g : spec.Groups(split)) split_of.emplace(g, split);
    }
    FoldAssignment fold;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      auto it = split_of.find(*groups[i]);
      if (it != split_of.end()) fold.roles.emplace(corpus[i].utterance_id, it->second);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

Json LeakageReport::ToJson() const {
  Json rows = Json::array();
  for (const auto& v : violations) {
    Json splits = Json::array();
    for (Split s : v.splits) splits.push_back(ToString(s));
    rows.push_back(
        {{"fold", v.fold}, {"kind", v.kind}, {"subject", v.subject}, {"splits", splits}});
  }
  return {{"ok", ok()}, {"violations", rows}};
}

LeakageReport CheckLeakage(const PartitionPlan& plan,
                           std::span<const UtteranceAnnotations> corpus) {
  std::unordered_map<std::string, const UtteranceAnnotations*> by_id;
  for (const auto& u : corpus) by_id.emplace(u.utterance_id, &u);

  LeakageReport report;
  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    std::map<std::string, std::set<Split>> speakers, dyads;
    for (const auto& [id, split] : plan.folds[k].roles) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::kValidation,
                    "plan fold " + std::to_string(k + 1) + " lists unknown utterance \"" + id + "\"");
      }
      speakers[it->second->speaker_id].insert(split);
      if (it->second->dyad_id) dyads[*it->second->dyad_id].insert(split);
    }
    auto collect = [&](const std::map<std::string, std::set<Split>>& m, const char* kind) {
      for (const auto& [subject, splits] : m) {
        if (splits.size() > 1) {
          report.violations.push_back(
              {k + 1, kind, subject, std::vector<Split>(splits.begin(), splits.end())});
        }
      }
    };
    collect(speakers, "speaker");
    collect(dyads, "dyad");
  }
  return report;
}

}  // namespace emokit
