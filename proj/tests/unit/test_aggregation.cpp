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

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "emokit/aggregation.hpp"
#include "test_util.hpp"

namespace emokit {
namespace {

using testing::CodeOf;
using testing::FromLetters;

VoteCounts Counts(const std::vector<std::string>& letters) {
  return CountVotes(FromLetters("u", letters), testing::FourClass());
}

std::string DropReason(const Label& l) {
  const auto* d = std::get_if<DroppedLabel>(&l);
  return d ? d->reason : std::string();
}

std::optional<std::size_t> SingleClass(const Label& l) {
  const auto* s = std::get_if<SingleLabel>(&l);
  return s ? std::optional<std::size_t>(s->class_index) : std::nullopt;
}

// Rules written out directly from vote lists, without VoteCounts.
struct NaiveRules {
  std::map<std::string, int> instances;
  int raters = 0;

  explicit NaiveRules(const UtteranceAnnotations& u) {
    for (const auto& v : u.votes) {
      if (v.emotions.empty()) continue;
      ++raters;
      for (const auto& e : v.emotions) ++instances[e];
    }
  }
  std::optional<std::string> Majority() const {
    std::vector<std::string> winners;
    for (const auto& [e, n] : instances) {
      if (n * 2 > raters) winners.push_back(e);
    }
    if (winners.size() == 1) return winners[0];
    return std::nullopt;
  }
  std::optional<std::string> Plurality() const {
    int best = -1, ties = 0;
    std::string arg;
    for (const auto& [e, n] : instances) {
      if (n > best) {
        best = n;
        ties = 1;
        arg = e;
      } else if (n == best) {
        ++ties;
      }
    }
    if (ties == 1) return arg;
    return std::nullopt;
  }
};

TEST_CASE("vote counting") {
  SUBCASE("N,A,A,S,S") {
    const auto c = Counts({"N", "A", "A", "S", "S"});
    CHECK(c.counts == std::vector<int>{1, 2, 2, 0});
    CHECK(c.total == 5);
    CHECK(c.raters == 5);
  }
  SUBCASE("ten instances with six happy") {
    const auto tax = EmotionTaxonomy::PodPrimary();
    const auto c = CountVotes(FromLetters("u", {"disgust", "contempt", "fear", "neutral", "happy",
                                                "happy", "happy", "happy", "happy", "happy"}),
                              tax);
    CHECK(c.counts == std::vector<int>{0, 0, 1, 1, 1, 1, 0, 6});
    CHECK(c.total == 10);
  }
  SUBCASE("singleton") {
    const auto c = Counts({"A"});
    CHECK(c.counts == std::vector<int>{0, 1, 0, 0});
    CHECK(c.total == 1);
  }
  SUBCASE("multi-select raters contribute one instance per class") {
    const auto u = testing::Utterance(
        "u", {testing::Vote("1", {"A", "H"}), testing::Vote("2", {"A"}), testing::Vote("3", {}, "meh")});
    const auto c = CountVotes(u, testing::FourClass());
    CHECK(c.counts == std::vector<int>{0, 2, 0, 1});
    CHECK(c.total == 3);
    CHECK(c.raters == 2);
  }
  SUBCASE("typed-description-only utterance is unscorable") {
    const auto u = testing::Utterance("u", {testing::Vote("1", {}, "nervous laugh")});
    CHECK(CodeOf([&] { CountVotes(u, testing::FourClass()); }) == ErrorCode::kUnscorable);
  }
}

TEST_CASE("counting is invariant to rater order") {
  testing::Gen g(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto tax = testing::RandomTaxonomy(g);
    auto u = testing::RandomUtterance(g, tax, "u");
    const auto before = CountVotes(u, tax);
    std::shuffle(u.votes.begin(), u.votes.end(), g.engine());
    const auto after = CountVotes(u, tax);
    CHECK(before.counts == after.counts);
    CHECK(before.total == after.total);
    CHECK(before.raters == after.raters);
  }
}

TEST_CASE("majority rule") {
  CHECK(DropReason(AggregateMr(Counts({"N", "A", "A", "S", "S"}))) == kNoMajority);
  CHECK(SingleClass(AggregateMr(Counts({"A", "A", "A", "N", "S"}))) == 1u);
  CHECK(SingleClass(AggregateMr(Counts({"A"}))) == 1u);
  CHECK(DropReason(AggregateMr(Counts({"A", "N"}))) == kNoMajority);

  // three raters each choosing both A and H
  const auto u = testing::Utterance("u", {testing::Vote("1", {"A", "H"}), testing::Vote("2", {"A", "H"}),
                                          testing::Vote("3", {"A", "H"})});
  const auto c = CountVotes(u, testing::FourClass());
  CHECK(c.counts == std::vector<int>{0, 3, 0, 3});
  CHECK(c.total == 6);
  CHECK(DropReason(AggregateMr(c)) == kAmbiguousMajority);

  CHECK(CodeOf([] { AggregateMr(VoteCounts{{0, 0}, 0, 0}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("plurality rule") {
  CHECK(DropReason(AggregatePr(Counts({"N", "A", "A", "S", "S"}))) == kPluralityTie);
  CHECK(SingleClass(AggregatePr(Counts({"A", "A", "N", "S", "H"}))) == 1u);
  CHECK(SingleClass(AggregatePr(Counts({"A"}))) == 1u);
}

TEST_CASE("all-inclusive rule") {
  const auto ar = std::get<DistributionLabel>(AggregateAr(Counts({"N", "A", "A", "S", "S"})));
  CHECK(ar.values == std::vector<double>{0.2, 0.4, 0.4, 0.0});

  const auto tax = EmotionTaxonomy::PodPrimary();
  const auto c = CountVotes(FromLetters("u", {"happy", "happy", "happy", "happy", "happy", "happy",
                                              "disgust", "contempt", "fear", "neutral"}),
                            tax);
  CHECK(std::get<DistributionLabel>(AggregateAr(c)).values ==
        std::vector<double>{0, 0, 0.1, 0.1, 0.1, 0.1, 0, 0.6});

  CHECK(std::get<DistributionLabel>(AggregateAr(Counts({"A"}))).values ==
        std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("rule properties on random vote multisets") {
  testing::Gen g(22);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto tax = testing::RandomTaxonomy(g);
    const auto u = testing::RandomUtterance(g, tax, "u", 9, 4);
    const auto counts = CountVotes(u, tax);
    const NaiveRules naive(u);

    const auto mr = AggregateMr(counts);
    const auto pr = AggregatePr(counts);
    const auto ar = std::get<DistributionLabel>(AggregateAr(counts)).values;

    const auto want_mr = naive.Majority();
    CHECK(SingleClass(mr).has_value() == want_mr.has_value());
    if (want_mr) CHECK(tax[*SingleClass(mr)] == *want_mr);
    const auto want_pr = naive.Plurality();
    CHECK(SingleClass(pr).has_value() == want_pr.has_value());
    if (want_pr) CHECK(tax[*SingleClass(pr)] == *want_pr);

    // MR keeps => PR keeps the same class.
    if (SingleClass(mr)) CHECK(SingleClass(pr) == SingleClass(mr));

    const double sum = std::accumulate(ar.begin(), ar.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    for (double x : ar) CHECK(x >= 0.0);
  }
}

TEST_CASE("smoothing") {
  const std::vector<double> p = {0.2, 0.4, 0.4, 0.0};
  const auto q = Smooth(p, 0.05);
  testing::CheckVectorNear(q, {0.2025, 0.3925, 0.3925, 0.0125}, 1e-15);
  CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) <= 1e-12);

  CHECK(Smooth(p, 0.0) == p);
  const std::vector<double> uniform(5, 0.2);
  for (double eps : {0.0, 0.05, 0.3, 0.9}) testing::CheckVectorNear(Smooth(uniform, eps), uniform, 1e-15);

  CHECK(CodeOf([&] { Smooth(p, 1.0); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { Smooth(p, -0.1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("smoothing is affine, sum- and order-preserving") {
  testing::Gen g(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = static_cast<std::size_t>(g.Int(2, 8));
    const auto p = g.Simplex(c);
    const auto r = g.Simplex(c);
    const double eps = g.Real(0.0, 0.99);
    const auto q = Smooth(p, eps);
    CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) <= 1e-12);
    if (eps > 0.0) {
      for (double x : q) CHECK(x > 0.0);
    }
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        if (p[i] > p[j]) CHECK(q[i] > q[j]);
      }
    }
    // affine: Smooth(t p + (1-t) r) = t Smooth(p) + (1-t) Smooth(r)
    const double t = g.Real(0.0, 1.0);
    std::vector<double> mix(c);
    for (std::size_t i = 0; i < c; ++i) mix[i] = t * p[i] + (1 - t) * r[i];
    const auto qm = Smooth(mix, eps);
    const auto qr = Smooth(r, eps);
    for (std::size_t i = 0; i < c; ++i) CHECK(std::abs(qm[i] - (t * q[i] + (1 - t) * qr[i])) <= 1e-12);
  }
}

TEST_CASE("corpus aggregation options") {
  const auto tax = testing::FourClass();
  const std::vector<UtteranceAnnotations> corpus = {
      FromLetters("u1", {"N", "A", "A", "S", "S"}),
      FromLetters("u2", {"A", "A", "N"}),
      testing::Utterance("u3", {testing::Vote("1", {}, "Concerned,Interest")}),
  };
  SUBCASE("ar smooths distributions by default") {
    const auto labels = AggregateCorpus(corpus, tax, {Rule::kAr});
    REQUIRE(labels.size() == 3);
    testing::CheckVectorNear(labels[0].TargetDistribution(4), {0.2025, 0.3925, 0.3925, 0.0125}, 1e-15);
    CHECK(labels[0].smoothed);
    CHECK(DropReason(labels[2].label) == kAwaitingRelabel);
    CHECK(labels[2].TargetDistribution(4).empty());
  }
  SUBCASE("zero smoothing leaves distributions raw") {
    const auto labels = AggregateCorpus(corpus, tax, {Rule::kAr, 0.0});
    CHECK(labels[0].TargetDistribution(4) == std::vector<double>{0.2, 0.4, 0.4, 0.0});
    CHECK_FALSE(labels[0].smoothed);
  }
  SUBCASE("mr one-hots are not smoothed unless asked") {
    const auto plain = AggregateCorpus(corpus, tax, {Rule::kMr});
    CHECK(DropReason(plain[0].label) == kNoMajority);
    CHECK(SingleClass(plain[1].label) == 1u);
    CHECK(plain[1].TargetDistribution(4) == std::vector<double>{0, 1, 0, 0});
    CHECK_FALSE(plain[1].smoothed);

    const auto smoothed = AggregateCorpus(corpus, tax, {Rule::kMr, 0.05, true});
    testing::CheckVectorNear(smoothed[1].TargetDistribution(4), {0.0125, 0.9625, 0.0125, 0.0125}, 1e-15);
    CHECK(smoothed[1].smoothed);
  }
}

TEST_CASE("data-loss report") {
  const auto tax = testing::FourClass();
  SUBCASE("unanimous single votes lose nothing") {
    std::vector<UtteranceAnnotations> corpus;
    for (int i = 0; i < 10; ++i) corpus.push_back(FromLetters("u" + std::to_string(i), {"S"}));
    const auto r = ComputeDataLoss(corpus, tax);
    CHECK(r.For(Rule::kMr).ratio == 0.0);
    CHECK(r.For(Rule::kPr).ratio == 0.0);
    CHECK(r.For(Rule::kAr).ratio == 0.0);
    CHECK(r.For(Rule::kAr).total == 10);
  }
  SUBCASE("typed-only utterances are routed, not counted") {
    const std::vector<UtteranceAnnotations> corpus = {
        FromLetters("u1", {"N", "A", "A", "S", "S"}),
        testing::Utterance("u2", {testing::Vote("1", {}, "tense")})};
    const auto r = ComputeDataLoss(corpus, tax);
    CHECK(r.routed_to_relabel == 1);
    CHECK(r.For(Rule::kMr).dropped == 1);
    CHECK(r.For(Rule::kMr).total == 1);
    CHECK(r.For(Rule::kPr).ratio == 1.0);
    const Json j = r.ToJson();
    CHECK(j["rules"][2]["rule"] == "ar");
    CHECK(j["routed_to_relabel"] == 1);
  }
  SUBCASE("loss(MR) >= loss(PR) >= loss(AR) = 0 on random corpora") {
    testing::Gen g(24);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto t = testing::RandomTaxonomy(g);
      std::vector<UtteranceAnnotations> corpus;
      const int n = g.Int(1, 40);
      for (int i = 0; i < n; ++i) {
        corpus.push_back(testing::RandomUtterance(g, t, "u" + std::to_string(i), 7, g.Int(1, 3)));
      }
      const auto r = ComputeDataLoss(corpus, t);
      CHECK(r.For(Rule::kMr).ratio >= r.For(Rule::kPr).ratio);
      CHECK(r.For(Rule::kPr).ratio >= r.For(Rule::kAr).ratio);
      CHECK(r.For(Rule::kAr).ratio == 0.0);
    }
  }
}

TEST_CASE("label JSONL round trip and validation") {
  const auto tax = testing::FourClass();
  std::vector<LabelRecord> labels(4);
  labels[0] = {"u0", SingleLabel{2}, {}, false};
  labels[1] = {"u1", DistributionLabel{Smooth(std::vector<double>{0.2, 0.4, 0.4, 0.0}, 0.05)}, {}, true};
  labels[2] = {"u2", DroppedLabel{std::string(kPluralityTie)}, {}, false};
  labels[3] = {"u3", SingleLabel{0}, {0.9625, 0.0125, 0.0125, 0.0125}, true};
  const std::string text = SerializeLabels(labels, tax);
  std::istringstream in(text);
  const auto back = ParseLabels(in, tax);
  CHECK(back == labels);

  const Json j = ToJson(labels[2], tax);
  CHECK(j["kind"] == "dropped");
  CHECK(j["reason"] == "plurality tie");
  CHECK(j["class"].is_null());
  CHECK(ToJson(labels[0], tax)["class"] == "S");

  CHECK(CodeOf([&] {
          LabelFromJson(Json::parse(R"({"utterance_id": "x", "kind": "distribution", "distribution": [0.5, 0.4, 0, 0]})"),
                        tax);
        }) == ErrorCode::kValidation);
  CHECK(CodeOf([&] {
          LabelFromJson(Json::parse(R"({"utterance_id": "x", "kind": "single", "class": "Q"})"), tax);
        }) == ErrorCode::kUnknownClass);
  CHECK(CodeOf([&] {
          LabelFromJson(Json::parse(R"({"utterance_id": "x", "kind": "weird"})"), tax);
        }) == ErrorCode::kParse);
  CHECK(ParseRule("pr") == Rule::kPr);
  CHECK(CodeOf([] { ParseRule("vote"); }) == ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace emokit
