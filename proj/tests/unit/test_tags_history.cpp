// tests/unit/test_tags_history.cpp
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

#include "dialoglm/history.hpp"
#include "dialoglm/synth.hpp"
#include "dialoglm/tags.hpp"
#include "test_util.hpp"

namespace dlm {
namespace {

using test::find_turn;
using test::worked_examples;

std::string context_string(const std::string& utt, int i, bool corrections = true) {
  const auto& c = worked_examples();
  const auto& t = find_turn(c, utt);
  return render_items(encode_context(t, derive_tags(t, c.tagset), c.tagset, i, corrections), t,
                      c.tagset);
}

TEST(DeriveTags, EditingTermAndModificationRepair) {
  const auto& c = worked_examples();
  const TagSequence ts = derive_tags(find_turn(c, "utt47"), c.tagset);
  ASSERT_EQ(ts.size(), 7);
  for (int i = 0; i < 7; ++i) {
    const auto& p = ts.at[static_cast<std::size_t>(i)];
    EXPECT_EQ(p.tone, Tone::Null) << i;
    EXPECT_EQ(p.edit, i == 3 ? Edit::Push : i == 4 ? Edit::ET : i == 5 ? Edit::Pop : Edit::Null) << i;
    EXPECT_EQ(p.repair, i == 5 ? RepairTag::Mod : RepairTag::Null) << i;
  }
  EXPECT_EQ(ts.at[5].onset, 2);
  EXPECT_EQ(ts.at[5].license, 2);
  EXPECT_EQ(ts.at[5].corr, Corr::Replace);
  EXPECT_TRUE(ts.final_tone);
  EXPECT_EQ(ts.tone(7), Tone::T);
  EXPECT_NO_THROW(check_tag_invariants(ts));
}

TEST(DeriveTags, AbridgedRepair) {
  const auto& c = worked_examples();
  const TagSequence ts = derive_tags(find_turn(c, "utt6"), c.tagset);
  EXPECT_EQ(ts.at[4].edit, Edit::Push);
  EXPECT_EQ(ts.at[5].edit, Edit::Pop);
  EXPECT_EQ(ts.at[5].repair, RepairTag::Abr);
  EXPECT_EQ(ts.at[5].onset, -1);
  EXPECT_EQ(ts.at[5].corr, Corr::None);
  EXPECT_FALSE(ts.final_tone);
  int non_null = 0;
  for (const auto& p : ts.at) non_null += p.edit != Edit::Null || p.repair != RepairTag::Null || p.tone != Tone::Null;
  EXPECT_EQ(non_null, 2);
}

TEST(DeriveTags, UnmatchedWordsLicenseTheNextReparandumWord) {
  // "engine two from Elmi- or engine three from Elmira": every alteration
  // word has a correspondence
  const auto& c = worked_examples();
  const TagSequence ts = derive_tags(find_turn(c, "utt42"), c.tagset);
  const Corr want[] = {Corr::Match, Corr::Replace, Corr::Match, Corr::Match};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(ts.at[static_cast<std::size_t>(5 + k)].license, k);
    EXPECT_EQ(ts.at[static_cast<std::size_t>(5 + k)].corr, want[k]);
  }
  // fresh start "so it'll take um so you want ...": only "so" corresponds;
  // the next alteration words are x and point past the last match
  const TagSequence fs = derive_tags(find_turn(c, "utt30"), c.tagset);
  EXPECT_EQ(fs.at[4].repair, RepairTag::Can);
  EXPECT_EQ(fs.at[4].corr, Corr::Match);
  EXPECT_EQ(fs.at[5].corr, Corr::Unmatched);
  EXPECT_EQ(fs.at[5].license, 1);
  EXPECT_EQ(fs.at[6].license, 1);
  EXPECT_EQ(fs.at[7].corr, Corr::None);  // window is the reparandum length
}

TEST(DeriveTags, ApplyTagsInvertsDerivation) {
  Rng rng(99);
  const SynthConfig cfg;
  for (int k = 0; k < 300; ++k) {
    AnnotatedTurn t = synthesize_turn(rng, cfg, 3 + rng.below(30));
    t.speaker = "u";
    t.utterance_id = "x";
    const Corpus c = make_corpus({Dialog{"d", {t}}});
    const TagSequence ts = derive_tags(t, c.tagset);
    check_tag_invariants(ts);
    AnnotatedTurn back = t;
    apply_tags(back, ts, c.tagset);
    EXPECT_EQ(back.tones, t.tones);
    ASSERT_EQ(back.repairs.size(), t.repairs.size());
    for (std::size_t r = 0; r < t.repairs.size(); ++r) {
      EXPECT_EQ(back.repairs[r].kind, t.repairs[r].kind);
      EXPECT_EQ(back.repairs[r].ip, t.repairs[r].ip);
      EXPECT_EQ(back.repairs[r].reparandum, t.repairs[r].reparandum);
      EXPECT_EQ(back.repairs[r].editing_term, t.repairs[r].editing_term);
    }
    EXPECT_EQ(derive_tags(back, c.tagset), ts);
  }
}

TEST(DeriveTags, MaskingRemovesFamilies) {
  const auto& c = worked_examples();
  const TagSequence ts = derive_tags(find_turn(c, "utt47"), c.tagset);
  const TagSequence no_tones = mask_tags(ts, {false, true, true});
  EXPECT_FALSE(no_tones.final_tone);
  EXPECT_EQ(no_tones.at[5].repair, RepairTag::Mod);
  const TagSequence no_corr = mask_tags(ts, {true, true, false});
  EXPECT_EQ(no_corr.at[5].repair, RepairTag::Mod);
  EXPECT_EQ(no_corr.at[5].onset, -1);
  EXPECT_EQ(no_corr.at[5].corr, Corr::None);
  const TagSequence none = mask_tags(ts, {false, false, false});
  for (const auto& p : none.at) EXPECT_EQ(p, PositionTags{});
  EXPECT_EQ(none.pos, ts.pos);
}

TEST(DeriveTags, InvariantViolationsAreRejected) {
  TagSequence ts;
  ts.at.resize(3);
  ts.pos = {0, 0, 0};
  ts.at[1].edit = Edit::Pop;  // Pop without Push
  EXPECT_THROW(check_tag_invariants(ts), DataError);
  ts.at[1] = {};
  ts.at[0].tone = Tone::T;
  EXPECT_THROW(check_tag_invariants(ts), DataError);
  ts.at[0] = {};
  ts.at[2].repair = RepairTag::Mod;
  ts.at[2].onset = 2;  // onset must precede the ip
  EXPECT_THROW(check_tag_invariants(ts), DataError);
}

TEST(EncodeContext, EditingTermIsInsertedAsItems) {
  EXPECT_EQ(context_string("utt47", 4), "it/PRP takes/VBP one/CD Push you/PRP");
}

TEST(EncodeContext, CompletedEditingTermIsCleanedUp) {
  EXPECT_EQ(context_string("utt6", 5), "so/CC_D we/PRP need/VBP to/TO");
  EXPECT_EQ(context_string("utt46", 4), "so/CC_D we/PRP need/VBP to/TO");
}

TEST(EncodeContext, ReparandumIsCleanedUpOnceTheOnsetIsKnown) {
  // "will take a total of um let's see total ...": after the onset of the
  // first repair is resolved, the context of the alteration is the fluent
  // prefix
  EXPECT_EQ(context_string("utt95", 8), "will/MD take/VB a/DT");
  // without corrections the reparandum stays and the repair is an item
  const std::string raw = context_string("utt95", 8, false);
  EXPECT_NE(raw.find("total/NN of/IN"), std::string::npos) << raw;
  EXPECT_NE(raw.find("M"), std::string::npos) << raw;
}

TEST(EncodeContext, FreshStartDropsTheAbandonedUtterance) {
  EXPECT_EQ(context_string("utt30", 4), "");
  EXPECT_EQ(context_string("utt30", 5), "so/CC_D");
}

TEST(History, EditingTermFeatures) {
  const auto& c = worked_examples();
  const auto& t = find_turn(c, "utt95");
  const TagSequence ts = derive_tags(t, c.tagset);
  TurnState s(c.tagset, t.size(), true);
  for (int k = 0; k <= 5; ++k) advance(s, ts, k);  // through "um"
  EXPECT_TRUE(s.in_editing_term());
  EXPECT_FALSE(s.nonfilledpause_et_seen());
  advance(s, ts, 6);  // "let's"
  EXPECT_TRUE(s.in_editing_term());
  EXPECT_TRUE(s.nonfilledpause_et_seen());
  advance(s, ts, 7);
  s.set_tone(Tone::T);
  s.set_edit(Edit::Pop);
  EXPECT_FALSE(s.in_editing_term());
}

TEST(History, OnsetCandidatesCoverTheWordsBeforeTheIp) {
  const auto& c = worked_examples();
  const auto& t = find_turn(c, "utt42");
  const TagSequence ts = derive_tags(t, c.tagset);
  TurnState s(c.tagset, t.size(), true);
  for (int k = 0; k < 5; ++k) advance(s, ts, k);
  s.set_tone(Tone::Null);
  s.set_edit(Edit::Pop);
  s.set_repair(RepairTag::Mod);
  const auto cand = s.onset_candidates(RepairTag::Mod, 10);
  EXPECT_EQ(cand, (std::vector<int>{0, 1, 2, 3}));
  s.set_onset(0);
  EXPECT_EQ(s.license_candidates(), (std::vector<int>{0, 1, 2, 3}));
}

TEST(History, StatesWalkedAlongEqualTagsAreEqual) {
  const auto& c = test::small_corpus();
  int checked = 0;
  for (const auto& d : c.dialogs)
    for (const auto& t : d.turns) {
      const TagSequence ts = derive_tags(t, c.tagset);
      TurnState a(c.tagset, t.size(), true), b(c.tagset, t.size(), true);
      for (int k = 0; k < t.size(); ++k) {
        advance(a, ts, k);
        advance(b, ts, k);
        ASSERT_TRUE(a == b);
        ASSERT_EQ(a.hash(), b.hash());
      }
      if (++checked == 60) return;
    }
}

}  // namespace
}  // namespace dlm
