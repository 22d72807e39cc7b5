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
#include <numeric>

#include "emokit/evaluation.hpp"
#include "test_util.hpp"

namespace emokit {
namespace {

using testing::CodeOf;
using testing::ErrorOf;
using Bits = std::vector<std::uint8_t>;

MultiHot MH(Bits b) { return MultiHot{std::move(b)}; }

// Brute-force oracle: counts each (sample, class) cell by enumeration and
// uses F1 = 2tp / (2tp + fp + fn), which never divides precision by recall.
std::vector<double> OracleF1(const std::vector<Bits>& preds, const std::vector<Bits>& golds,
                             std::size_t c) {
  std::vector<double> f1(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    long double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const int p = preds[i][k], g = golds[i][k];
      tp += (p == 1 && g == 1);
      fp += (p == 1 && g == 0);
      fn += (p == 0 && g == 1);
    }
    const long double den = 2 * tp + fp + fn;
    f1[k] = den == 0 ? 0.0 : static_cast<double>(2 * tp / den);
  }
  return f1;
}

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0L) / static_cast<long double>(v.size());
}

Bits RandomBits(testing::Gen& g, std::size_t c) {
  Bits b(c);
  for (auto& x : b) x = g.Coin(0.35) ? 1 : 0;
  return b;
}

TEST_CASE("binarization at 1/C") {
  CHECK(Binarize(std::vector<double>{0.2, 0.4, 0.4, 0.0}).bits == Bits{0, 1, 1, 0});
  CHECK(Binarize(std::vector<double>{0.2, 0.35, 0.35, 0.1}).bits == Bits{0, 1, 1, 0});
  CHECK(Binarize(std::vector<double>{0.1, 0.45, 0.45, 0.0}).bits == Bits{0, 1, 1, 0});
  CHECK(Binarize(std::vector<double>{0.45, 0.1, 0.0, 0.45}).bits == Bits{1, 0, 0, 1});
  CHECK(Binarize(std::vector<double>{0.25, 0.25, 0.25, 0.25}).bits == Bits{0, 0, 0, 0});
  CHECK(Binarize(std::vector<double>{0.5, 0.5}).bits == Bits{0, 0});
}

TEST_CASE("argmax is set whenever its mass exceeds 1/C") {
  testing::Gen g(41);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = static_cast<std::size_t>(g.Int(2, 8));
    const auto p = g.Simplex(c);
    const auto arg = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const auto bits = Binarize(p).bits;
    if (p[arg] > 1.0 / static_cast<double>(c)) CHECK(bits[arg] == 1);
    // scaling every entry by 2 can only add bits
    std::vector<double> doubled(p);
    for (auto& x : doubled) x *= 2;
    const auto more = Binarize(doubled).bits;
    for (std::size_t k = 0; k < c; ++k) CHECK(more[k] >= bits[k]);
  }
}

TEST_CASE("multi-hot input must be exactly 0 or 1") {
  CHECK(MultiHotFromValues(std::vector<double>{0, 1, 1, 0}).bits == Bits{0, 1, 1, 0});
  CHECK(CodeOf([] { MultiHotFromValues(std::vector<double>{0, 0.5}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("hand-enumerated macro-F1") {
  const std::vector<MultiHot> golds = {MH({0, 1, 1, 0}), MH({1, 0, 0, 1})};
  const std::vector<MultiHot> preds = {MH({0, 1, 1, 0}), MH({1, 0, 0, 0})};
  const auto r = MacroF1(preds, golds);
  REQUIRE(r.per_class.size() == 4);
  CHECK(r.per_class[0].f1 == 1.0);
  CHECK(r.per_class[1].f1 == 1.0);
  CHECK(r.per_class[2].f1 == 1.0);
  CHECK(r.per_class[3].f1 == 0.0);
  CHECK(r.per_class[3].precision == 0.0);  // 0/0
  CHECK(r.per_class[3].recall == 0.0);
  CHECK(r.macro_f1 == 0.75);
  CHECK(r.n_samples == 2);
}

TEST_CASE("worked evaluation example") {
  const auto gold = Binarize(std::vector<double>{0.2, 0.4, 0.4, 0.0});
  const std::vector<MultiHot> preds = {Binarize(std::vector<double>{0.2, 0.35, 0.35, 0.1}),
                                       Binarize(std::vector<double>{0.1, 0.45, 0.45, 0.0}),
                                       Binarize(std::vector<double>{0.45, 0.1, 0.0, 0.45})};
  const std::vector<MultiHot> golds(3, gold);
  const auto r = MacroF1(preds, golds);
  // classes 1 and 2: tp 2, fn 1 -> f1 0.8; classes 0 and 3: fp only -> 0
  CHECK(r.per_class[1].f1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.per_class[2].f1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.per_class[0].f1 == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("identical predictions score 1 when every class occurs") {
  testing::Gen g(42);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t c = static_cast<std::size_t>(g.Int(2, 8));
    std::vector<MultiHot> golds;
    for (std::size_t k = 0; k < c; ++k) {
      Bits b(c, 0);
      b[k] = 1;
      golds.push_back(MH(b));
    }
    const int extra = g.Int(0, 20);
    for (int i = 0; i < extra; ++i) golds.push_back(MH(RandomBits(g, c)));
    CHECK(MacroF1(golds, golds).macro_f1 == 1.0);
  }
}

TEST_CASE("macro-F1 matches the brute-force oracle") {
  testing::Gen g(43);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t c = static_cast<std::size_t>(g.Int(2, 8));
    const int n = g.Int(1, 50);
    std::vector<Bits> pb, gb;
    std::vector<MultiHot> preds, golds;
    for (int i = 0; i < n; ++i) {
      pb.push_back(RandomBits(g, c));
      gb.push_back(RandomBits(g, c));
      preds.push_back(MH(pb.back()));
      golds.push_back(MH(gb.back()));
    }
    const auto r = MacroF1(preds, golds);
    const auto want = OracleF1(pb, gb, c);
    for (std::size_t k = 0; k < c; ++k) CHECK(std::abs(r.per_class[k].f1 - want[k]) <= 1e-12);
    CHECK(std::abs(r.macro_f1 - Mean(want)) <= 1e-12);
  }
}

TEST_CASE("macro-F1 is invariant to sample order and class relabeling") {
  testing::Gen g(44);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t c = static_cast<std::size_t>(g.Int(2, 8));
    const int n = g.Int(1, 30);
    std::vector<MultiHot> preds, golds;
    for (int i = 0; i < n; ++i) {
      preds.push_back(MH(RandomBits(g, c)));
      golds.push_back(MH(RandomBits(g, c)));
    }
    const double base = MacroF1(preds, golds).macro_f1;

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), g.engine());
    std::vector<std::size_t> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    std::vector<MultiHot> p2, g2;
    for (auto i : order) {
      Bits a(c), b(c);
      for (std::size_t k = 0; k < c; ++k) {
        a[perm[k]] = preds[i].bits[k];
        b[perm[k]] = golds[i].bits[k];
      }
      p2.push_back(MH(a));
      g2.push_back(MH(b));
    }
    CHECK(std::abs(MacroF1(p2, g2).macro_f1 - base) <= 1e-12);
  }
}

TEST_CASE("one-hot inputs reduce to single-label macro-F1") {
  testing::Gen g(45);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t c = static_cast<std::size_t>(g.Int(2, 8));
    const int n = g.Int(1, 40);
    std::vector<std::size_t> yp, yt;
    std::vector<MultiHot> preds, golds;
    for (int i = 0; i < n; ++i) {
      yp.push_back(static_cast<std::size_t>(g.Int(0, static_cast<int>(c) - 1)));
      yt.push_back(static_cast<std::size_t>(g.Int(0, static_cast<int>(c) - 1)));
      Bits a(c, 0), b(c, 0);
      a[yp.back()] = 1;
      b[yt.back()] = 1;
      preds.push_back(MH(a));
      golds.push_back(MH(b));
    }
    // single-label oracle from a confusion matrix
    std::vector<std::vector<int>> cm(c, std::vector<int>(c, 0));
    for (int i = 0; i < n; ++i) ++cm[yt[static_cast<std::size_t>(i)]][yp[static_cast<std::size_t>(i)]];
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      int row = 0, col = 0;
      for (std::size_t j = 0; j < c; ++j) {
        row += cm[k][j];
        col += cm[j][k];
      }
      const double p = col ? static_cast<double>(cm[k][k]) / col : 0.0;
      const double r = row ? static_cast<double>(cm[k][k]) / row : 0.0;
      sum += (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    CHECK(std::abs(MacroF1(preds, golds).macro_f1 - sum / static_cast<double>(c)) <= 1e-12);
  }
}

TEST_CASE("macro-F1 input validation") {
  CHECK(CodeOf([] { MacroF1(std::vector{MH({0, 1})}, std::vector<MultiHot>{}); }) ==
        ErrorCode::kDimension);
  CHECK(CodeOf([] { MacroF1(std::vector{MH({0, 1, 0})}, std::vector{MH({0, 1})}); }) ==
        ErrorCode::kDimension);
  CHECK(CodeOf([] { MacroF1(std::vector<MultiHot>{}, std::vector<MultiHot>{}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("confusion counts merge exactly across shards") {
  testing::Gen g(46);
  const std::size_t c = 6;
  ConfusionCounts whole(c), a(c), b(c);
  for (int i = 0; i < 100; ++i) {
    const auto p = MH(RandomBits(g, c)), t = MH(RandomBits(g, c));
    whole.Add(p, t);
    (i % 3 ? a : b).Add(p, t);
  }
  a.Merge(b);
  CHECK(a.tp == whole.tp);
  CHECK(a.fp == whole.fp);
  CHECK(a.fn == whole.fn);
  CHECK(ScoreCounts(a, 100).macro_f1 == ScoreCounts(whole, 100).macro_f1);
}

struct Fixture {
  EmotionTaxonomy tax = testing::FourClass();
  std::vector<LabelRecord> gold = {
      {"u1", DistributionLabel{{0.2, 0.4, 0.4, 0.0}}, {}, false},
      {"u2", SingleLabel{0}, {}, false},
      {"u3", DroppedLabel{"no majority"}, {}, false},
      {"u4", DistributionLabel{{0.0, 0.0, 0.5, 0.5}}, {}, false},
  };
};

TEST_CASE("scoring prediction files against gold labels") {
  Fixture f;
  const std::vector<PredictionRecord> preds = {{"u1", {0.2, 0.35, 0.35, 0.1}},
                                               {"u2", {0.9, 0.1, 0.0, 0.0}},
                                               {"u4", {0.0, 0.0, 0.9, 0.1}}};
  const auto r = ScorePredictions(preds, f.gold, f.tax, std::nullopt);
  CHECK(r.n_samples == 3);  // dropped gold is skipped
  // class H: gold in u4 only, never predicted
  CHECK(r.per_class[3].f1 == 0.0);
  CHECK(r.per_class[0].f1 == 1.0);

  SUBCASE("missing prediction names the utterance") {
    const std::vector<PredictionRecord> partial(preds.begin(), preds.begin() + 2);
    const Error e = ErrorOf([&] { ScorePredictions(partial, f.gold, f.tax, std::nullopt); });
    CHECK(e.code() == ErrorCode::kValidation);
    CHECK(e.details()["missing"] == Json::array({"u4"}));
    CHECK(std::string(e.what()).find("u4") != std::string::npos);
  }
  SUBCASE("unknown prediction id") {
    auto extra = preds;
    extra.push_back({"zz", {1, 0, 0, 0}});
    const Error e = ErrorOf([&] { ScorePredictions(extra, f.gold, f.tax, std::nullopt); });
    CHECK(e.details()["unexpected"] == Json::array({"zz"}));
  }
  SUBCASE("subset restricts the scored utterances") {
    const std::vector<PredictionRecord> one = {preds[0]};
    const auto s = ScorePredictions(one, f.gold, f.tax, std::vector<std::string>{"u1"});
    CHECK(s.n_samples == 1);
    CHECK(s.macro_f1 == 0.5);
    CHECK(CodeOf([&] {
            ScorePredictions(preds, f.gold, f.tax, std::vector<std::string>{"u1"});
          }) == ErrorCode::kValidation);
    CHECK(CodeOf([&] {
            ScorePredictions(one, f.gold, f.tax, std::vector<std::string>{"u1", "u9"});
          }) == ErrorCode::kNotFound);
  }
  SUBCASE("dimension and duplicate errors") {
    auto bad = preds;
    bad[0].distribution.pop_back();
    CHECK(CodeOf([&] { ScorePredictions(bad, f.gold, f.tax, std::nullopt); }) ==
          ErrorCode::kDimension);
    auto dup = preds;
    dup.push_back(preds[0]);
    CHECK(CodeOf([&] { ScorePredictions(dup, f.gold, f.tax, std::nullopt); }) ==
          ErrorCode::kDuplicateId);
  }
  SUBCASE("multi-hot predictions score like their binarized distributions") {
    const std::vector<PredictionRecord> mh = {{"u1", {0, 1, 1, 0}}, {"u2", {1, 0, 0, 0}},
                                              {"u4", {0, 0, 1, 0}}};
    const auto m = ScorePredictions(mh, f.gold, f.tax, std::nullopt, PredictionFormat::kMultiHot);
    CHECK(m.macro_f1 == r.macro_f1);
    CHECK(CodeOf([&] {
            ScorePredictions(preds, f.gold, f.tax, std::nullopt, PredictionFormat::kMultiHot);
          }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("fold combination") {
  ConfusionCounts a(2), b(2);
  a.tp = {1, 0};
  a.fp = {0, 1};
  a.fn = {0, 0};
  b.tp = {3, 2};
  b.fp = {1, 0};
  b.fn = {0, 2};
  const std::vector<EvalResult> folds = {ScoreCounts(a, 2), ScoreCounts(b, 5)};
  const auto mean = CombineFolds(folds, FoldCombine::kMean);
  CHECK(mean.macro_f1 == doctest::Approx((folds[0].macro_f1 + folds[1].macro_f1) / 2));
  CHECK(mean.n_samples == 7);
  const auto pool = CombineFolds(folds, FoldCombine::kPool);
  ConfusionCounts merged = a;
  merged.Merge(b);
  CHECK(pool.macro_f1 == ScoreCounts(merged, 7).macro_f1);
  CHECK(pool.macro_f1 != mean.macro_f1);
  CHECK(CodeOf([] { CombineFolds({}, FoldCombine::kMean); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("report JSON layout") {
  Fixture f;
  const auto r = MacroF1(std::vector{MH({0, 1, 1, 0})}, std::vector{MH({0, 1, 0, 0})});
  const Json j = ReportJson(r, f.tax, "iemocap", 3);
  CHECK(j["dataset"] == "iemocap");
  CHECK(j["fold"] == 3);
  CHECK(j["n_samples"] == 1);
  CHECK(j["per_class"].size() == 4);
  CHECK(j["per_class"][1]["class"] == "A");
  CHECK(j["per_class"][1]["f1"] == 1.0);
  CHECK(ReportJson(r, f.tax, "x", std::nullopt)["fold"].is_null());
}

TEST_CASE("relative gain") {
  CHECK(std::abs(RelativeGain(0.265, 0.290) - 9.45) <= 0.2);
  CHECK(std::abs(RelativeGain(0.350, 0.353) - 0.77) <= 0.2);
  CHECK(std::abs(RelativeGain(0.331, 0.341) - 3.09) <= 0.2);
  CHECK(RelativeGain(0.186, 0.186) == 0.0);
  CHECK(RelativeGain(0.4, 0.4) == 0.0);
  CHECK(RelativeGain(0.5, 0.25) == -50.0);
  CHECK(CodeOf([] { RelativeGain(0.0, 0.3); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([] { RelativeGain(-0.1, 0.3); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("printed gains are consistent with three-decimal scores") {
  struct Row {
    double before, after, printed;
  };
  const std::vector<Row> rows = {{0.350, 0.353, 0.77}, {0.331, 0.335, 1.08}, {0.331, 0.341, 3.09},
                                 {0.329, 0.338, 2.74}, {0.342, 0.350, 2.22}, {0.321, 0.325, 1.28},
                                 {0.292, 0.300, 2.74}, {0.301, 0.305, 1.58}, {0.265, 0.290, 9.45},
                                 {0.308, 0.317, 3.14}, {0.295, 0.306, 3.52}, {0.275, 0.298, 8.49},
                                 {0.275, 0.290, 5.75}, {0.296, 0.310, 4.94}, {0.298, 0.307, 3.19},
                                 {0.186, 0.186, 0.00}};
  for (const auto& r : rows) {
    CAPTURE(r.before);
    CAPTURE(r.after);
    const double lo = RelativeGain(r.before + 5e-4, r.after - 5e-4);
    const double hi = RelativeGain(r.before - 5e-4, r.after + 5e-4);
    CHECK(lo <= r.printed);
    CHECK(r.printed <= hi);
  }
}

// Moment-by-moment CCC in long double with raw sums.
double OracleCcc(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double mx = sx / n, my = sy / n;
  const long double vx = sxx / n - mx * mx, vy = syy / n - my * my, cov = sxy / n - mx * my;
  return static_cast<double>(2 * cov / (vx + vy + (mx - my) * (mx - my)));
}

TEST_CASE("concordance correlation") {
  const std::vector<double> x = {0.1, 0.4, 0.35, 0.8, 0.2};
  CHECK(Ccc(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<double> shifted(x);
  for (auto& v : shifted) v += 0.3;
  CHECK(Ccc(x, shifted) < 1.0);
  std::vector<double> negated(x);
  for (auto& v : negated) v = -v;
  CHECK(Ccc(x, negated) < 0.0);

  testing::Gen g(47);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = g.Int(2, 40);
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(g.Real(0, 1));
      b.push_back(0.5 * a.back() + g.Real(-0.3, 0.3));
    }
    const double c = Ccc(a, b);
    CHECK(std::abs(c - OracleCcc(a, b)) <= 1e-12);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }

  CHECK(CodeOf([] { Ccc(std::vector<double>{0.3, 0.3}, std::vector<double>{0.3, 0.3}); }) ==
        ErrorCode::kUnscorable);
  CHECK(CodeOf([] { Ccc(std::vector<double>{1}, std::vector<double>{1}); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(CodeOf([] { Ccc(std::vector<double>{1, 2}, std::vector<double>{1}); }) ==
        ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace emokit
