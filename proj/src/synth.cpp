// src/synth.cpp
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

#include "dialoglm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace dlm {

int Rng::below(int n) {
  const auto range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % range;
  std::uint64_t x;
  do x = gen_();
  while (x >= limit);
  return static_cast<int>(x % range);
}

double Rng::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

namespace {

struct Word {
  std::string surface;
  std::string pos;
  const std::vector<std::string>* slot = nullptr;  // alternatives for replacements
};

using Phrase = std::vector<Word>;

const std::vector<std::string> kPronoun = {"we", "I"};
const std::vector<std::string> kModal = {"will", "can", "should"};
const std::vector<std::string> kMoveVerb = {"take", "send", "get", "move"};
const std::vector<std::string> kLoadVerb = {"load", "fill", "unload"};
const std::vector<std::string> kNeedVerb = {"need", "want", "have"};
const std::vector<std::string> kDet = {"the", "a"};
const std::vector<std::string> kCar = {"engine", "tanker", "boxcar", "train"};
const std::vector<std::string> kNumber = {"one", "two", "three", "four", "five"};
const std::vector<std::string> kCity = {"Corning", "Elmira", "Avon", "Bath", "Dansville"};
const std::vector<std::string> kPrep = {"from", "through"};
const std::vector<std::string> kCargo = {"oranges", "bananas"};
const std::vector<std::string> kAck = {"okay", "right", "yeah", "yes"};
const std::vector<std::string> kLength = {"long", "far"};
const std::vector<std::string> kDuration = {"take", "total"};

const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
  return v[static_cast<std::size_t>(rng.below(static_cast<int>(v.size())))];
}

Word w(Rng& rng, const std::vector<std::string>& slot, const char* pos) {
  return Word{pick(rng, slot), pos, &slot};
}
Word fixed(const char* surface, const char* pos) { return Word{surface, pos, nullptr}; }

void discourse_marker(Rng& rng, Phrase& p) {
  switch (rng.below(5)) {
    case 0: p.push_back(fixed("so", "CC_D")); break;
    case 1: p.push_back(fixed("and", "CC_D")); break;
    case 2: p.push_back(fixed("okay", "UH_D")); break;
    case 3: p.push_back(fixed("well", "UH_D")); break;
    default: p.push_back(fixed("now", "RB_D")); break;
  }
}

/// Kind 3 is the duration phrase that hosts the "will total" repair.
Phrase make_phrase(Rng& rng, int kind) {
  Phrase p;
  if (kind != 4 && rng.chance(0.35)) discourse_marker(rng, p);
  switch (kind) {
    case 0:  // we will take the engine two to Bath
      p.push_back(w(rng, kPronoun, "PRP"));
      if (rng.chance(0.5)) p.push_back(w(rng, kModal, "MD"));
      p.push_back(w(rng, kMoveVerb, "VB"));
      p.push_back(w(rng, kDet, "DT"));
      p.push_back(w(rng, kCar, "NN"));
      if (rng.chance(0.4)) p.push_back(w(rng, kNumber, "CD"));
      if (rng.chance(0.5)) {
        p.push_back(fixed("to", "TO"));
      } else {
        p.push_back(w(rng, kPrep, "IN"));
      }
      p.push_back(w(rng, kCity, "NNP"));
      break;
    case 1:  // we need to load the tanker with oranges
      p.push_back(w(rng, kPronoun, "PRP"));
      p.push_back(w(rng, kNeedVerb, "VBP"));
      p.push_back(fixed("to", "TO"));
      p.push_back(w(rng, kLoadVerb, "VB"));
      p.push_back(w(rng, kDet, "DT"));
      p.push_back(w(rng, kCar, "NN"));
      p.push_back(fixed("with", "IN"));
      p.push_back(w(rng, kCargo, "NNS"));
      break;
    case 2:  // how long will that take
      p.push_back(fixed("how", "WRB"));
      p.push_back(w(rng, kLength, "JJ"));
      p.push_back(fixed("will", "MD"));
      p.push_back(fixed("that", "DT"));
      p.push_back(fixed("take", "VB"));
      break;
    case 3: {  // that will take three hours
      p.push_back(fixed("that", "DT"));
      p.push_back(fixed("will", "MD"));
      Word v = fixed(rng.chance(0.8) ? "take" : "total", "VB");
      v.slot = &kDuration;
      p.push_back(v);
      p.push_back(w(rng, kNumber, "CD"));
      p.push_back(fixed("hours", "NNS"));
      break;
    }
    case 4:  // okay
      if (rng.chance(0.8)) {
        p.push_back(w(rng, kAck, "AC"));
      } else {
        p.push_back(fixed("that", "DT"));
        p.push_back(fixed("sounds", "VBZ"));
        p.push_back(fixed("good", "JJ"));
      }
      break;
    case 5:  // then we go to Avon
      p.push_back(fixed("then", "RB"));
      p.push_back(w(rng, kPronoun, "PRP"));
      p.push_back(fixed("go", "VBP"));
      p.push_back(fixed("to", "TO"));
      p.push_back(w(rng, kCity, "NNP"));
      break;
    default:  // engine two is at Elmira
      p.push_back(w(rng, kCar, "NN"));
      p.push_back(w(rng, kNumber, "CD"));
      p.push_back(fixed("is", "VBZ"));
      p.push_back(fixed("at", "IN"));
      p.push_back(w(rng, kCity, "NNP"));
      break;
  }
  return p;
}

int phrase_kind(Rng& rng) {
  static const int weights[] = {26, 16, 8, 14, 18, 9, 9};
  int x = rng.below(100);
  for (int k = 0; k < 7; ++k) {
    if (x < weights[k]) return k;
    x -= weights[k];
  }
  return 0;
}

Phrase editing_term(Rng& rng, bool abridged) {
  const int k = rng.below(abridged ? 4 : 6);
  switch (k) {
    case 0:
    case 1: return {fixed("um", "UH_FP")};
    case 2: return {fixed("uh", "UH_FP")};
    case 3: return {fixed("let's", "VB"), fixed("see", "VB")};
    case 4: return {fixed("I", "PRP"), fixed("mean", "VBP")};
    default: return {fixed("or", "CC")};
  }
}

double round_ms(double s) { return std::round(s * 1000.0) / 1000.0; }

enum class Site { Fluent, AfterTone, AfterBoundary, Push, Pop, ModIp, FreshIp };

double silence(Rng& rng, Site site) {
  double s = 0.0;
  switch (site) {
    case Site::Fluent:
      if (rng.chance(0.12)) s = rng.uniform(0.0, 0.1);
      else if (rng.chance(0.03)) s = rng.uniform(0.1, 0.6);
      break;
    case Site::AfterTone:
      if (rng.chance(0.75)) s = rng.uniform(0.3, 1.6);
      else if (rng.chance(0.5)) s = rng.uniform(0.0, 0.2);
      break;
    case Site::AfterBoundary:
      if (rng.chance(0.2)) s = rng.uniform(0.0, 0.1);
      break;
    case Site::Push:
      s = rng.chance(0.6) ? rng.uniform(0.2, 0.9) : rng.uniform(0.0, 0.15);
      break;
    case Site::Pop:
      if (rng.chance(0.45)) s = rng.uniform(0.1, 0.6);
      break;
    case Site::ModIp:
      if (rng.chance(0.55)) s = rng.uniform(0.1, 0.5);
      break;
    case Site::FreshIp:
      s = rng.chance(0.65) ? rng.uniform(0.25, 1.2) : rng.uniform(0.0, 0.1);
      break;
  }
  return round_ms(s);
}

bool can_fragment(const Word& x) {
  return x.surface.size() >= 4 && (x.pos == "NN" || x.pos == "NNP" || x.pos == "VB");
}

std::string fragment_of(Rng& rng, const std::string& s) {
  const int len = 2 + rng.below(static_cast<int>(s.size()) - 3);
  return s.substr(0, static_cast<std::size_t>(len)) + "-";
}

class TurnBuilder {
 public:
  explicit TurnBuilder(Rng& rng) : rng_(rng) {}

  int size() const { return turn_.size(); }

  void emit(const Word& x, Site site, bool fragment = false) {
    Token t;
    t.surface = x.surface;
    t.pos = fragment ? "FRAGMENT" : x.pos;
    t.is_fragment = fragment;
    t.silence_before = size() == 0 ? 0.0 : silence(rng_, site);
    turn_.tokens.push_back(std::move(t));
  }

  /// Emits the editing term starting at the current position; returns its span.
  Span emit_editing_term(const Phrase& et) {
    Span s{size(), size()};
    for (std::size_t k = 0; k < et.size(); ++k) emit(et[k], k == 0 ? Site::Push : Site::Fluent);
    s.end = size();
    return s;
  }

  void add_repair(RepairAnnotation r) { turn_.repairs.push_back(std::move(r)); }
  void add_tone() { turn_.tones.push_back(size()); }
  AnnotatedTurn finish() {
    std::sort(turn_.repairs.begin(), turn_.repairs.end(),
              [](const auto& a, const auto& b) { return a.ip < b.ip; });
    return std::move(turn_);
  }

 private:
  Rng& rng_;
  AnnotatedTurn turn_;
};

struct PhrasePlan {
  Phrase words;
  int kind = 0;
  bool total_take = false;
  bool mod = false, abridged = false, fresh = false;
};

int plan_length(const PhrasePlan& p) {
  int n = static_cast<int>(p.words.size());
  if (p.total_take) n += 2;
  if (p.mod) n += 5;  // reparandum up to 3 + editing term up to 2
  if (p.abridged) n += 2;
  if (p.fresh) n += 5;
  return n;
}

void emit_phrase(TurnBuilder& b, Rng& rng, const PhrasePlan& plan, Site first_site) {
  const Phrase& p = plan.words;
  const int L = static_cast<int>(p.size());
  Site site = first_site;
  auto next_site = [&]() {
    Site s = site;
    site = Site::Fluent;
    return s;
  };

  if (plan.fresh) {
    const int start = b.size();
    Phrase abandoned = make_phrase(rng, phrase_kind(rng));
    const int m = std::min(1 + rng.below(3), std::max(1, static_cast<int>(abandoned.size()) - 1));
    for (int k = 0; k < m; ++k) {
      const bool frag = k == m - 1 && can_fragment(abandoned[static_cast<std::size_t>(k)]) &&
                        rng.chance(0.25);
      Word x = abandoned[static_cast<std::size_t>(k)];
      if (frag) x.surface = fragment_of(rng, x.surface);
      b.emit(x, next_site(), frag);
    }
    RepairAnnotation r;
    r.kind = RepairKind::FreshStart;
    r.ip = b.size();
    r.reparandum = Span{start, r.ip};
    if (rng.chance(0.3)) {
      r.editing_term = b.emit_editing_term(editing_term(rng, false));
      site = Site::Pop;
    } else {
      site = Site::FreshIp;
    }
    b.add_repair(r);
  }

  int mod_j = -1, mod_r = 0, abr_j = -1;
  if (plan.total_take) {
    mod_j = 3;  // "that will total will take ..."
    mod_r = 2;
  } else if (plan.mod && L >= 2) {
    mod_j = 1 + rng.below(L - 1);
    mod_r = 1 + rng.below(std::min(3, mod_j));
  } else if (plan.abridged && L >= 2) {
    abr_j = 1 + rng.below(L - 1);
  }
  CorrKind varied = CorrKind::Match;  // correspondence of the last reparandum word

  for (int j = 0; j < L; ++j) {
    if (j == mod_j) {
      // p[a..j) went out as the reparandum (last word varied); the
      // alteration restarts at a
      const int a = j - mod_r;
      const int rep_begin = b.size() - mod_r;
      RepairAnnotation r;
      r.kind = RepairKind::Modification;
      r.ip = b.size();
      r.reparandum = Span{rep_begin, r.ip};
      if (rng.chance(plan.total_take ? 0.15 : 0.35)) {
        r.editing_term = b.emit_editing_term(editing_term(rng, false));
        site = Site::Pop;
      } else {
        site = Site::ModIp;
      }
      const int alt = b.size();
      for (int k = 0; k < mod_r; ++k) {
        Correspondence c;
        c.reparandum = rep_begin + k;
        c.alteration = alt + k;
        c.kind = CorrKind::Match;
        r.correspondences.push_back(c);
      }
      r.correspondences.back().kind = varied;
      b.add_repair(r);
      for (int k = a; k < j; ++k) b.emit(p[static_cast<std::size_t>(k)], next_site());
    }
    if (j == abr_j) {
      RepairAnnotation r;
      r.kind = RepairKind::Abridged;
      r.ip = b.size();
      r.editing_term = b.emit_editing_term(editing_term(rng, true));
      site = Site::Pop;
      b.add_repair(r);
    }
    const Word& x = p[static_cast<std::size_t>(j)];
    if (mod_j >= 0 && j == mod_j - 1) {
      Word v = x;
      bool frag = false;
      varied = CorrKind::Match;
      if (plan.total_take) {
        v.surface = "total";
        varied = CorrKind::Replace;
      } else {
        const int style = rng.below(10);
        if (style < 4 && x.slot && x.slot->size() > 1) {
          do v.surface = pick(rng, *x.slot);
          while (v.surface == x.surface);
          varied = CorrKind::Replace;
        } else if (style < 6 && can_fragment(x)) {
          v.surface = fragment_of(rng, x.surface);
          frag = true;
        }
      }
      b.emit(v, next_site(), frag);
    } else {
      b.emit(x, next_site());
    }
  }
}

}  // namespace

AnnotatedTurn synthesize_turn(Rng& rng, const SynthConfig& cfg, int max_words) {
  TurnBuilder b(rng);
  const int phrases = 1 + rng.below(cfg.max_phrases);
  int budget = max_words;
  Site site = Site::Fluent;
  for (int ph = 0; ph < phrases; ++ph) {
    PhrasePlan plan;
    plan.kind = phrase_kind(rng);
    plan.words = make_phrase(rng, plan.kind);
    if (plan.kind == 3 && rng.chance(cfg.total_take_rate) &&
        plan.words.front().surface == "that") {
      plan.total_take = true;
      plan.words[2].surface = "take";
    } else if (rng.chance(cfg.mod_repair_rate)) {
      plan.mod = true;
    } else if (rng.chance(cfg.abridged_rate)) {
      plan.abridged = true;
    }
    plan.fresh = rng.chance(cfg.fresh_start_rate);
    if (plan_length(plan) > budget) {
      plan.total_take = plan.mod = plan.abridged = plan.fresh = false;
      if (static_cast<int>(plan.words.size()) > budget) {
        if (ph > 0 || budget <= 0) break;
        plan.words.resize(static_cast<std::size_t>(budget));
      }
    }
    if (ph == 0 && rng.chance(cfg.initial_pause_rate) && budget > static_cast<int>(plan.words.size())) {
      b.emit(fixed("um", "UH_FP"), Site::Fluent);
      --budget;
    }
    const int before = b.size();
    emit_phrase(b, rng, plan, site);
    budget -= b.size() - before;
    const bool last = ph + 1 == phrases || budget <= 0;
    if (rng.chance(last ? 0.97 : 1.0 - cfg.missing_tone_rate)) {
      b.add_tone();
      site = Site::AfterTone;
    } else {
      site = Site::AfterBoundary;
    }
    if (budget <= 0) break;
  }
  return b.finish();
}

Corpus synthesize_corpus(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<Dialog> dialogs;
  for (int d = 0; d < cfg.dialogs; ++d) {
    Dialog dlg;
    dlg.id = "s" + std::to_string(d + 1);
    const int turns = cfg.min_turns + rng.below(cfg.max_turns - cfg.min_turns + 1);
    for (int t = 0; t < turns; ++t) {
      AnnotatedTurn turn = synthesize_turn(rng, cfg, 40);
      turn.speaker = t % 2 == 0 ? "u" : "s";
      turn.utterance_id = "utt" + std::to_string(t + 1);
      dlg.turns.push_back(std::move(turn));
    }
    dialogs.push_back(std::move(dlg));
  }
  return make_corpus(std::move(dialogs));
}

}  // namespace dlm
