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

#include "emokit/relabel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "emokit/error.hpp"
#include "emokit/resources.hpp"

namespace emokit {

namespace {

const std::vector<std::string>& RelabelClasses() {
  static const std::vector<std::string> classes = [] {
    const auto t = EmotionTaxonomy::PodPrimary();
    return std::vector<std::string>(t.classes().begin(), t.classes().end());
  }();
  return classes;
}

}  // namespace

void ClientConfig::Validate() const {
  if (batch_size < 1 || batch_size > kMaxRelabelBatch) {
    throw Error(ErrorCode::kInvalidArgument, "batch size must lie in [1, 30]");
  }
  if (temperature < 0.0) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (max_attempts < 1) throw Error(ErrorCode::kInvalidArgument, "max attempts must be >= 1");
  if (max_in_flight < 1) throw Error(ErrorCode::kInvalidArgument, "max in-flight must be >= 1");
}

std::string_view BuildPrompt() {
  static const std::string_view prompt = *resources::Find("prompts/relabel-v14");
  return prompt;
}

std::string EscapeDescription(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\\' || c == '#' || c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string UnescapeDescription(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size()) ++i;
    out += text[i];
  }
  return out;
}

std::string FormatProbability(double p) {
  if (p == 0.0) return "0.0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p, std::chars_format::fixed);
  if (ec != std::errc()) throw Error(ErrorCode::kInvalidArgument, "cannot format probability");
  std::string s(buf, end);
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

std::string EncodeBatch(std::span<const RelabelItem> items) {
  if (items.empty()) throw Error(ErrorCode::kInvalidArgument, "empty relabel batch");
  if (items.size() > kMaxRelabelBatch) {
    throw Error(ErrorCode::kInvalidArgument, "relabel batch of " + std::to_string(items.size()) +
                                                 " items exceeds 30");
  }
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ValidateDistributionShape(items[i].reference, kRelabelClasses, "reference distribution");
    if (i > 0) out += '|';
    out += EscapeDescription(items[i].descriptions);
    out += '#';
    for (std::size_t c = 0; c < kRelabelClasses; ++c) {
      if (c > 0) out += ',';
      out += FormatProbability(items[i].reference[c]);
    }
  }
  return out;
}

namespace {

// Splits on `sep` outside backslash escapes; escapes are kept.
std::vector<std::string_view> SplitUnescaped(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

}  // namespace

std::vector<RelabelItem> DecodeBatch(std::string_view wire) {
  std::vector<RelabelItem> items;
  int index = 0;
  for (auto part : SplitUnescaped(wire, '|')) {
    const auto fields = SplitUnescaped(part, '#');
    if (fields.size() != 2) throw Error(ErrorCode::kParse, "batch item without a single '#'");
    RelabelItem item;
    item.index = ++index;
    item.descriptions = UnescapeDescription(fields[0]);
    std::string_view nums = fields[1];
    while (!nums.empty()) {
      const auto comma = nums.find(',');
      const auto tok = nums.substr(0, comma);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::kParse, "bad number \"" + std::string(tok) + "\" in batch");
      }
      item.reference.push_back(v);
      if (comma == std::string_view::npos) break;
      nums.remove_prefix(comma + 1);
    }
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

// Rewrites 'single quoted' strings as JSON strings, leaving double-quoted
// strings untouched. Returns nullopt if a quote is left open.
std::optional<std::string> SingleToDoubleQuotes(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '"') {
      out += c;
      for (++i; i < raw.size(); ++i) {
        out += raw[i];
        if (raw[i] == '\\' && i + 1 < raw.size()) {
          out += raw[++i];
        } else if (raw[i] == '"') {
          break;
        }
      }
      if (i >= raw.size()) return std::nullopt;
    } else if (c == '\'') {
      std::string body;
      for (++i; i < raw.size() && raw[i] != '\''; ++i) body += raw[i];
      if (i >= raw.size()) return std::nullopt;
      out += Json(body).dump();
    } else {
      out += c;
    }
  }
  return out;
}

Json ParseLenient(std::string_view raw) {
  try {
    return Json::parse(raw);
  } catch (const Json::parse_error& first) {
    if (auto fixed = SingleToDoubleQuotes(raw)) {
      try {
        return Json::parse(*fixed);
      } catch (const Json::parse_error&) {
      }
    }
    throw Error(ErrorCode::kParse, "response is not JSON: " + std::string(first.what()));
  }
}

std::optional<int> ParseIndex(const Json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (!v.is_string()) return std::nullopt;
  const std::string s = v.get<std::string>();
  int out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return out;
}

bool LooksLikeDistribution(const Json& obj) {
  if (!obj.is_object()) return false;
  for (const auto& cls : RelabelClasses()) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      std::string key = it.key();
      std::transform(key.begin(), key.end(), key.begin(), ::tolower);
      if (key == cls) return true;
    }
  }
  return false;
}

using Entry = std::pair<std::optional<int>, const Json*>;

void CollectEntries(const Json& node, std::span<const RelabelItem> batch, int depth,
                    std::vector<Entry>& out) {
  if (depth > 3) return;
  if (node.is_array()) {
    for (const auto& el : node) {
      if (el.is_object() && el.contains("index")) {
        out.emplace_back(ParseIndex(el["index"]), &el);
      } else if (LooksLikeDistribution(el) && node.size() == batch.size()) {
        // positional array without explicit indices
        out.emplace_back(batch[static_cast<std::size_t>(&el - &node[0])].index, &el);
      }
    }
    return;
  }
  if (!node.is_object()) return;
  if (LooksLikeDistribution(node)) {
    if (node.contains("index")) {
      out.emplace_back(ParseIndex(node["index"]), &node);
    } else if (batch.size() == 1) {
      out.emplace_back(batch.front().index, &node);
    }
    return;
  }
  bool all_indexed = !node.empty();
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!ParseIndex(Json(it.key()))) all_indexed = false;
  }
  if (all_indexed) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      out.emplace_back(ParseIndex(Json(it.key())), &it.value());
    }
    return;
  }
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (it->is_array() || it->is_object()) CollectEntries(*it, batch, depth + 1, out);
  }
}

std::optional<std::string> ReadDistribution(const Json& obj, std::vector<double>& values,
                                            std::string& reason) {
  if (!obj.is_object()) return "answer is not an object";
  std::unordered_map<std::string, const Json*> lowered;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string key = it.key();
    std::transform(key.begin(), key.end(), key.begin(), ::tolower);
    lowered[key] = &it.value();
  }
  values.clear();
  for (const auto& cls : RelabelClasses()) {
    auto it = lowered.find(cls);
    if (it == lowered.end()) return "missing key \"" + cls + "\"";
    const Json& v = *it->second;
    if (!v.is_number()) return "value for \"" + cls + "\" is not a number";
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < 0.0) return "value for \"" + cls + "\" is negative or non-finite";
    values.push_back(x);
  }
  reason.clear();
  if (auto it = lowered.find("reason"); it != lowered.end() && it->second->is_string()) {
    reason = it->second->get<std::string>();
  }
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  if (std::abs(sum - 1.0) > kResponseSumTolerance) {
    return "distribution sums to " + std::to_string(sum) + ", outside 1 +/- 0.01";
  }
  for (double& x : values) x /= sum;
  return std::nullopt;
}

bool Differs(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kModifiedTolerance) return true;
  }
  return false;
}

}  // namespace

ParsedResponse ParseResponsePartial(std::string_view raw, std::span<const RelabelItem> batch) {
  const Json doc = ParseLenient(raw);
  std::vector<Entry> entries;
  CollectEntries(doc, batch, 0, entries);

  std::map<int, const RelabelItem*> by_index;
  for (const auto& item : batch) by_index.emplace(item.index, &item);

  ParsedResponse out;
  std::set<int> answered;
  for (const auto& [index, node] : entries) {
    if (!index || !by_index.count(*index) || answered.count(*index)) {
      out.extra.push_back(index.value_or(-1));
      continue;
    }
    answered.insert(*index);
    RelabelResult r;
    r.index = *index;
    if (auto problem = ReadDistribution(*node, r.adjusted, r.reason)) {
      out.flagged.push_back({*index, *problem});
      continue;
    }
    r.modified = Differs(r.adjusted, by_index.at(*index)->reference);
    out.accepted.push_back(std::move(r));
  }
  for (const auto& [index, item] : by_index) {
    if (!answered.count(index)) out.missing.push_back(index);
  }
  std::sort(out.accepted.begin(), out.accepted.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

ParsedResponse ParseResponse(std::string_view raw, std::span<const RelabelItem> batch) {
  ParsedResponse parsed = ParseResponsePartial(raw, batch);
  if (!parsed.missing.empty()) {
    throw Error(ErrorCode::kValidation,
                "response misses index " + std::to_string(parsed.missing.front()),
                {{"missing", parsed.missing}});
  }
  if (!parsed.extra.empty()) {
    throw Error(ErrorCode::kValidation,
                "response answers unknown or repeated index " + std::to_string(parsed.extra.front()),
                {{"extra", parsed.extra}});
  }
  return parsed;
}

std::vector<RelabelRequest> CollectRelabelRequests(std::span<const UtteranceAnnotations> corpus,
                                                   const EmotionTaxonomy& taxonomy) {
  if (!std::equal(taxonomy.classes().begin(), taxonomy.classes().end(), RelabelClasses().begin(),
                  RelabelClasses().end())) {
    throw Error(ErrorCode::kInvalidArgument,
                "relabeling needs the 8-class pod-primary taxonomy order");
  }
  std::vector<RelabelRequest> out;
  for (const auto& utt : corpus) {
    if (!utt.HasAnyDescription()) continue;
    RelabelRequest req;
    req.utterance_id = utt.utterance_id;
    for (const auto& v : utt.votes) {
      if (!v.HasDescription()) continue;
      if (!req.descriptions.empty()) req.descriptions += ',';
      req.descriptions += *v.typed_description;
    }
    if (utt.HasAnyEmotion()) {
      req.reference = std::get<DistributionLabel>(AggregateAr(CountVotes(utt, taxonomy))).values;
    } else {
      req.reference.assign(kRelabelClasses, 1.0 / static_cast<double>(kRelabelClasses));
    }
    out.push_back(std::move(req));
  }
  return out;
}

Json ToJson(const RelabelRecord& rec) {
  return {{"utterance_id", rec.utterance_id}, {"reference", rec.reference},
          {"adjusted", rec.adjusted},         {"reason", rec.reason},
          {"modified", rec.modified},         {"fallback", rec.fallback}};
}

RelabelRecord RelabelRecordFromJson(const Json& j) {
  RelabelRecord r;
  r.utterance_id = RequireString(j, "utterance_id");
  r.reference = RequireNumberArray(j, "reference");
  r.adjusted = RequireNumberArray(j, "adjusted");
  ValidateDistributionShape(r.reference, kRelabelClasses, "reference");
  ValidateDistributionShape(r.adjusted, kRelabelClasses, "adjusted");
  r.reason = OptionalString(j, "reason").value_or("");
  r.modified = RequireField(j, "modified").get<bool>();
  r.fallback = j.value("fallback", false);
  return r;
}

std::vector<RelabelRecord> LoadRelabelRecords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<RelabelRecord> out;
  ForEachJsonLine(in, path.string(),
                  [&](const Json& j, std::size_t) { out.push_back(RelabelRecordFromJson(j)); });
  return out;
}

std::string SerializeRelabelRecords(std::span<const RelabelRecord> records) {
  std::vector<Json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(ToJson(r));
  return ToJsonLines(lines);
}

RelabelPipeline::RelabelPipeline(ChatTransport& transport, ClientConfig config)
    : transport_(transport), config_(std::move(config)) {
  config_.Validate();
}

namespace {

struct PendingItem {
  const RelabelRequest* request;
  int attempts = 0;
  std::string last_problem;
};

struct BatchOutcome {
  std::optional<ParsedResponse> parsed;
  std::string failure;
};

}  // namespace

std::vector<RelabelRecord> RelabelPipeline::Run(std::span<const RelabelRequest> requests,
                                                std::span<const RelabelRecord> done) {
  std::unordered_set<std::string> finished;
  for (const auto& r : done) finished.insert(r.utterance_id);

  std::vector<PendingItem> pending;
  for (const auto& req : requests) {
    if (finished.insert(req.utterance_id).second) pending.push_back({&req});
  }
  std::unordered_map<std::string, RelabelRecord> produced;
  const std::string system_prompt(BuildPrompt());

  while (!pending.empty()) {
    // Batches of this round, in request order.
    std::vector<std::vector<PendingItem*>> batches;
    for (std::size_t i = 0; i < pending.size(); i += config_.batch_size) {
      std::vector<PendingItem*> b;
      for (std::size_t k = i; k < std::min(pending.size(), i + config_.batch_size); ++k) {
        b.push_back(&pending[k]);
      }
      batches.push_back(std::move(b));
    }
    std::vector<std::vector<RelabelItem>> items(batches.size());
    for (std::size_t b = 0; b < batches.size(); ++b) {
      for (std::size_t k = 0; k < batches[b].size(); ++k) {
        const auto* req = batches[b][k]->request;
        items[b].push_back({static_cast<int>(k + 1), req->descriptions, req->reference});
      }
    }

    std::vector<BatchOutcome> outcomes(batches.size());
    for (std::size_t start = 0; start < batches.size(); start += config_.max_in_flight) {
      const std::size_t end = std::min(batches.size(), start + config_.max_in_flight);
      std::vector<std::future<BatchOutcome>> inflight;
      for (std::size_t b = start; b < end; ++b) {
        ChatRequest req{config_.model,     config_.temperature, config_.seed,
                        config_.json_mode, system_prompt,       EncodeBatch(items[b])};
        ++requests_sent_;
        inflight.push_back(std::async(std::launch::async, [this, req, &items, b] {
          BatchOutcome o;
          try {
            o.parsed = ParseResponsePartial(transport_.Complete(req), items[b]);
          } catch (const Error& e) {
            o.failure = e.what();
          }
          return o;
        }));
      }
      for (std::size_t b = start; b < end; ++b) outcomes[b] = inflight[b - start].get();
    }

    // Single writer: fold outcomes back in batch order.
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const BatchOutcome& o = outcomes[b];
      std::map<int, std::string> problems;
      if (!o.parsed) {
        spdlog::warn("relabel batch failed: {}", o.failure);
        for (const auto& it : items[b]) problems[it.index] = o.failure;
      } else {
        for (const auto& r : o.parsed->accepted) {
          const PendingItem* p = batches[b][static_cast<std::size_t>(r.index - 1)];
          produced[p->request->utterance_id] = {p->request->utterance_id, p->request->reference,
                                                r.adjusted, r.reason, r.modified, false};
        }
        for (const auto& f : o.parsed->flagged) problems[f.index] = f.problem;
        for (int idx : o.parsed->missing) problems[idx] = "no answer for this index";
        if (!o.parsed->extra.empty()) {
          spdlog::warn("relabel response carried {} unexpected entries", o.parsed->extra.size());
        }
      }
      for (const auto& [idx, problem] : problems) {
        PendingItem* p = batches[b][static_cast<std::size_t>(idx - 1)];
        ++p->attempts;
        p->last_problem = problem;
      }
    }

    std::vector<PendingItem> next;
    for (auto& p : pending) {
      const std::string& id = p.request->utterance_id;
      if (produced.count(id)) continue;
      if (p.attempts >= config_.max_attempts) {
        spdlog::warn("giving up on \"{}\" after {} attempts ({}); keeping its reference", id,
                     p.attempts, p.last_problem);
        produced[id] = {id, p.request->reference, p.request->reference,
                        "fallback: " + p.last_problem, false, true};
        continue;
      }
      next.push_back(p);
    }
    pending = std::move(next);
  }

  std::vector<RelabelRecord> out(done.begin(), done.end());
  for (const auto& req : requests) {
    auto it = produced.find(req.utterance_id);
    if (it != produced.end()) {
      out.push_back(std::move(it->second));
      produced.erase(it);
    }
  }
  return out;
}

Json RelabelStats::ToJson() const {
  return {{"relabeled", relabeled},
          {"modified", modified},
          {"fallback", fallback},
          {"modified_fraction", modified_fraction}};
}

MergeOutcome Merge(std::span<const RelabelRecord> records, std::span<const LabelRecord> labels,
                   const MergeOptions& options) {
  MergeOutcome out;
  out.labels.assign(labels.begin(), labels.end());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.labels.size(); ++i) index.emplace(out.labels[i].utterance_id, i);

  for (const auto& rec : records) {
    auto it = index.find(rec.utterance_id);
    if (it == index.end()) {
      throw Error(ErrorCode::kNotFound,
                  "relabel result for unknown utterance \"" + rec.utterance_id + "\"");
    }
    LabelRecord& label = out.labels[it->second];
    const auto* dropped = std::get_if<DroppedLabel>(&label.label);
    const bool replaceable = std::holds_alternative<DistributionLabel>(label.label) ||
                             (dropped && dropped->reason == kAwaitingRelabel);
    if (!replaceable) {
      throw Error(ErrorCode::kValidation, "utterance \"" + rec.utterance_id +
                                              "\" does not carry a distribution label");
    }
    ValidateDistributionShape(rec.adjusted, kRelabelClasses, "adjusted distribution");
    if (options.resmooth_epsilon) {
      label.label = DistributionLabel{Smooth(rec.adjusted, *options.resmooth_epsilon)};
      label.smoothed = *options.resmooth_epsilon > 0.0;
    } else {
      label.label = DistributionLabel{rec.adjusted};
      label.smoothed = false;
    }
    ++out.stats.relabeled;
    if (rec.modified) ++out.stats.modified;
    if (rec.fallback) ++out.stats.fallback;
  }
  out.stats.modified_fraction =
      out.stats.relabeled == 0
          ? 0.0
          : static_cast<double>(out.stats.modified) / static_cast<double>(out.stats.relabeled);
  return out;
}

double EstimateCost(std::size_t samples, const ClientConfig& config) {
  return static_cast<double>(samples) * config.cost_per_sample_usd;
}

}  // namespace emokit
