// tests/unit/test_eval.cpp
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

#include <gtest/gtest.h>

#include <cmath>

#include "dialoglm/error.hpp"
#include "dialoglm/eval.hpp"
#include "dialoglm/synth.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace dlm {
namespace {

EventSet events(EventKind k, std::initializer_list<int> positions) {
  EventSet s;
  s.kind = k;
  for (int p : positions) s.ids.insert({0, p});
  return s;
}

TEST(Eval, ConstructedPrfCase) {
  // 10 gold, 9 predicted, 8 shared
  const auto gold = events(EventKind::Tone, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto pred = events(EventKind::Tone, {1, 2, 3, 4, 5, 6, 7, 8, 20});
  const Prf m = prf(gold, pred);
  EXPECT_EQ(m.recall, 0.8);
  EXPECT_EQ(m.precision, 8.0 / 9.0);
  EXPECT_EQ(m.error_rate, 0.3);
}

TEST(Eval, EmptySetConventions) {
  const auto none = events(EventKind::Tone, {});
  const auto some = events(EventKind::Tone, {3});
  Prf m = prf(none, none);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.error_rate, 0.0);
  m = prf(none, some);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_TRUE(std::isinf(m.error_rate));
  m = prf(some, none);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.error_rate, 1.0);
  EXPECT_THROW(prf(some, events(EventKind::RepairDetection, {3})), UsageError);
}

TEST(Eval, CountsAddUp) {
  test::Gen g(3);
  for (int rep = 0; rep < 100; ++rep) {
    EventSet a{EventKind::Tone, {}}, b{EventKind::Tone, {}};
    for (int i = 0; i < 30; ++i) {
      if (test::uniform_int(g, 0, 2) == 0) a.ids.insert({test::uniform_int(g, 0, 3), i});
      if (test::uniform_int(g, 0, 2) == 0) b.ids.insert({test::uniform_int(g, 0, 3), i});
    }
    const auto c = count_events(a, b);
    std::size_t both = 0;
    for (const auto& id : a.ids) both += b.ids.count(id);
    EXPECT_EQ(c.correct, both);
    EXPECT_EQ(c.gold, a.ids.size());
    EXPECT_EQ(c.predicted, b.ids.size());
    const Prf m = c.metrics();
    if (c.gold > 0)
      EXPECT_NEAR(m.error_rate, 1 - m.recall + (c.predicted - c.correct) / static_cast<double>(c.gold), 1e-12);
  }
}

TEST(Eval, RepairSitesUseThePushPosition) {
  const auto& c = test::worked_examples();
  const auto& t = test::find_turn(c, "utt47");  // mod ip=3 with an editing term
  const auto tags = derive_tags(t, c.tagset);
  const auto sites = repair_sites(tags);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].ip, 3);
  EXPECT_EQ(sites[0].kind, RepairTag::Mod);
  EXPECT_EQ(sites[0].onset, 2);
  const auto& a = test::find_turn(c, "utt6");  // abridged
  const auto asites = repair_sites(derive_tags(a, c.tagset));
  ASSERT_EQ(asites.size(), 1u);
  EXPECT_EQ(asites[0].ip, 4);
  EXPECT_EQ(asites[0].onset, 4);
}

TEST(Eval, TurnEventsFromGoldAnnotation) {
  const auto& c = test::worked_examples();
  const auto& t = test::find_turn(c, "utt95");
  const auto tags = derive_tags(t, c.tagset);
  EXPECT_EQ(turn_events(EventKind::Tone, 4, tags, c.tagset).ids,
            (std::set<EventId>{{4, 8}, {4, 14}}));
  EXPECT_EQ(turn_events(EventKind::TurnInternalTone, 4, tags, c.tagset).ids, (std::set<EventId>{{4, 8}}));
  EXPECT_EQ(turn_events(EventKind::RepairDetection, 4, tags, c.tagset).ids,
            (std::set<EventId>{{4, 5}, {4, 11}}));
  EXPECT_EQ(turn_events(EventKind::RepairCorrection, 4, tags, c.tagset).ids,
            (std::set<EventId>{{4, 5, 3}, {4, 11, 9}}));
  const auto& dm = test::find_turn(c, "utt46");
  const auto dm_events = turn_events(EventKind::DiscourseMarker, 0, derive_tags(dm, c.tagset), c.tagset);
  EXPECT_TRUE(dm_events.ids.count({0, 0}));  // "so/CC_D"
}

TEST(Eval, PosErrorRateSkipsPseudoTags) {
  const auto& ts = test::worked_examples().tagset;
  const TagId nn = ts.id("NN"), vb = ts.id("VB"), push = ts.pseudo(PseudoTag::Push);
  EXPECT_EQ(pos_error_rate({nn, vb, nn, vb}, {nn, vb, vb, vb}, ts), 0.25);
  EXPECT_EQ(pos_error_rate({nn, push}, {nn, vb}, ts), 0.0);
  EXPECT_EQ(pos_error_rate({}, {}, ts), 0.0);
  EXPECT_THROW(pos_error_rate({nn}, {}, ts), DataError);
}

TEST(Eval, FoldsPartitionTheDialogs) {
  for (std::size_t n = 2; n < 60; ++n)
    for (int k = 2; k <= static_cast<int>(std::min<std::size_t>(n, 10)); ++k) {
      const auto f = fold_ranges(n, k);
      ASSERT_EQ(static_cast<int>(f.size()), k);
      EXPECT_EQ(f.front().first, 0u);
      EXPECT_EQ(f.back().second, n);
      for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_LT(f[i].first, f[i].second);
        if (i > 0) EXPECT_EQ(f[i].first, f[i - 1].second);
        // sizes differ by at most one
        EXPECT_LE(f[i].second - f[i].first, n / static_cast<std::size_t>(k) + 1);
      }
    }
  EXPECT_THROW(fold_ranges(10, 1), UsageError);
  EXPECT_THROW(fold_ranges(3, 6), DataError);
}

Corpus tiny_synthetic() {
  SynthConfig sc;
  sc.seed = 99;
  sc.dialogs = 8;
  sc.min_turns = 3;
  sc.max_turns = 5;
  sc.max_phrases = 2;
  return synthesize_corpus(sc);
}

TEST(Eval, CrossValidationPoolsItsFolds) {
  const Corpus c = tiny_synthetic();
  const auto r = cross_validate(c, 4, ModelConfig{}, BeamOptions{10, 8.0});
  ASSERT_EQ(r.folds.size(), 4u);
  std::set<std::string> seen;
  EvalCounts sum;
  for (const auto& f : r.folds) {
    for (const auto& d : f.dialogs) EXPECT_TRUE(seen.insert(d).second) << d;
    sum += f.counts;
  }
  EXPECT_EQ(seen.size(), c.dialogs.size());
  EXPECT_EQ(sum.words, c.num_words());
  EXPECT_EQ(r.total.words, sum.words);
  EXPECT_EQ(r.total.pos_errors, sum.pos_errors);
  for (int k = 0; k < kNumEventKinds; ++k) EXPECT_EQ(r.total.events[static_cast<std::size_t>(k)], sum.events[static_cast<std::size_t>(k)]);
  EXPECT_DOUBLE_EQ(r.total.perplexity.log2_sum, sum.perplexity.log2_sum);
  EXPECT_GT(r.total.trigram.words, 0u);
  // pooled perplexity is not the mean of fold perplexities but the
  // perplexity of all words together
  EXPECT_NEAR(r.total.perplexity.perplexity(),
              std::exp2(-sum.perplexity.log2_sum / static_cast<double>(sum.perplexity.words)), 1e-12);
}

TEST(Eval, ReportJsonIsDeterministic) {
  const Corpus c = tiny_synthetic();
  const auto a = cross_validate(c, 3, ModelConfig{}, BeamOptions{10, 8.0});
  const auto b = cross_validate(c, 3, ModelConfig{}, BeamOptions{10, 8.0});
  const std::string ja = report_json(a);
  EXPECT_EQ(ja, report_json(b));
  const auto j = nlohmann::json::parse(ja);
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["folds"].size(), 3u);
  EXPECT_EQ(j["total"]["words"], c.num_words());
}

TEST(Eval, InfinityIsWrittenAsAString) {
  MetricsReport r;
  r.beam.margin = kInfinity;
  r.total.events[0].predicted = 2;  // no gold tones, two guesses
  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(j["beam"]["margin"], "inf");
  EXPECT_EQ(j["total"]["events"]["tones"]["error_rate"], "inf");
  EXPECT_TRUE(j["total"]["perplexity"]["trigram"]["perplexity"].is_null());
}

TEST(Eval, TableColumnsAblateFromTheBase) {
  const auto cols = table_columns(TableKind::Repairs, ModelConfig{});
  ASSERT_EQ(cols.size(), 4u);
  EXPECT_FALSE(cols[0].second.mask.tones);
  EXPECT_FALSE(cols[0].second.mask.corrections);
  EXPECT_FALSE(cols[0].second.silences);
  EXPECT_TRUE(cols[3].second.mask.tones && cols[3].second.mask.corrections && cols[3].second.silences);
  for (const auto& [label, cfg] : cols) EXPECT_NO_THROW(cfg.validate()) << label;
  for (auto k : {TableKind::Pos, TableKind::Tones})
    for (const auto& [label, cfg] : table_columns(k, ModelConfig{})) EXPECT_NO_THROW(cfg.validate()) << label;
}

TEST(Eval, TableRendersEveryColumn) {
  MetricsReport r;
  r.total.words = 10;
  r.total.perplexity = {-20.0, 10};
  r.total.trigram = {-30.0, 10};
  const std::string s = render_table(TableKind::Tones, {{"Tones", &r}, {"Tones+Silences", &r}});
  EXPECT_NE(s.find("Tones+Silences"), std::string::npos);
  EXPECT_NE(s.find("Recall"), std::string::npos);
  EXPECT_NE(s.find("Perplexity"), std::string::npos);
  EXPECT_NE(s.find("4.00"), std::string::npos);  // 2^(20/10)
  EXPECT_NE(s.find("8.00"), std::string::npos);
}

}  // namespace
}  // namespace dlm
