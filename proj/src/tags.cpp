// src/tags.cpp
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

#include "dialoglm/tags.hpp"

#include <map>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

Tone TagSequence::tone(int position) const {
  if (position == size()) return final_tone ? Tone::T : Tone::Null;
  return at.at(static_cast<std::size_t>(position)).tone;
}

const char* tone_name(Tone t) { return t == Tone::T ? "T" : "null"; }

const char* edit_name(Edit e) {
  switch (e) {
    case Edit::Null: return "null";
    case Edit::Push: return "Push";
    case Edit::ET: return "ET";
    case Edit::Pop: return "Pop";
  }
  return "?";
}

const char* repair_name(RepairTag r) {
  switch (r) {
    case RepairTag::Null: return "null";
    case RepairTag::Mod: return "M";
    case RepairTag::Can: return "C";
    case RepairTag::Abr: return "A";
  }
  return "?";
}

const char* corr_name(Corr c) {
  switch (c) {
    case Corr::None: return "none";
    case Corr::Match: return "m";
    case Corr::Replace: return "r";
    case Corr::Unmatched: return "x";
  }
  return "?";
}

namespace {

RepairTag tag_of(RepairKind k) {
  switch (k) {
    case RepairKind::Modification: return RepairTag::Mod;
    case RepairKind::FreshStart: return RepairTag::Can;
    case RepairKind::Abridged: return RepairTag::Abr;
  }
  return RepairTag::Null;
}

RepairKind kind_of(RepairTag r) {
  switch (r) {
    case RepairTag::Can: return RepairKind::FreshStart;
    case RepairTag::Abr: return RepairKind::Abridged;
    default: return RepairKind::Modification;
  }
}

}  // namespace

TagSequence derive_tags(const AnnotatedTurn& turn, const Tagset& tagset) {
  const int n = turn.size();
  TagSequence ts;
  ts.at.resize(static_cast<std::size_t>(n));
  ts.pos.reserve(static_cast<std::size_t>(n));
  for (const auto& tok : turn.tokens) ts.pos.push_back(tagset.id(tok.pos));
  for (int t : turn.tones) {
    if (t == n) ts.final_tone = true;
    else if (t > 0) ts.at[static_cast<std::size_t>(t)].tone = Tone::T;
  }
  for (const auto& r : turn.repairs) {
    const int a = r.alteration_onset();
    if (!r.editing_term.empty()) {
      ts.at[static_cast<std::size_t>(r.editing_term.begin)].edit = Edit::Push;
      for (int i = r.editing_term.begin + 1; i < r.editing_term.end; ++i)
        ts.at[static_cast<std::size_t>(i)].edit = Edit::ET;
      ts.at[static_cast<std::size_t>(a)].edit = Edit::Pop;
    }
    auto& p = ts.at[static_cast<std::size_t>(a)];
    p.repair = tag_of(r.kind);
    if (r.kind != RepairKind::Abridged) p.onset = r.reparandum.begin;
  }
  // L/C windows need every Push and R placed first, since a later repair
  // cuts an earlier window short.
  for (const auto& r : turn.repairs) {
    if (r.kind == RepairKind::Abridged) continue;
    const int a = r.alteration_onset();
    std::map<int, const Correspondence*> by_alt;
    for (const auto& c : r.correspondences) by_alt[c.alteration] = &c;
    int next = r.reparandum.begin;
    for (int j = a; j < a + r.reparandum.size() && j < n; ++j) {
      auto& p = ts.at[static_cast<std::size_t>(j)];
      if (j > a && (p.edit == Edit::Push || p.repair != RepairTag::Null)) break;
      auto it = by_alt.find(j);
      if (it != by_alt.end()) {
        p.license = it->second->reparandum;
        p.corr = it->second->kind == CorrKind::Match ? Corr::Match : Corr::Replace;
        next = p.license + 1;
      } else {
        p.license = next;
        p.corr = Corr::Unmatched;
      }
    }
  }
  return ts;
}

void check_tag_invariants(const TagSequence& tags) {
  const int n = tags.size();
  if (static_cast<int>(tags.pos.size()) != n) throw DataError("POS sequence length mismatch");
  if (n > 0 && tags.at[0].tone != Tone::Null) throw DataError("tone before the first word");
  bool in_et = false;
  int push_pos = -1;
  // active L/C window
  int w_onset = -1, w_ip = -1, w_end = -1, w_next = -1;
  for (int i = 0; i < n; ++i) {
    const auto& p = tags.at[static_cast<std::size_t>(i)];
    const std::string where = "position " + std::to_string(i) + ": ";
    switch (p.edit) {
      case Edit::Null:
        if (in_et) throw DataError(where + "editing term not closed");
        break;
      case Edit::Push:
        if (in_et || i == 0) throw DataError(where + "misplaced Push");
        in_et = true;
        push_pos = i;
        break;
      case Edit::ET:
        if (!in_et) throw DataError(where + "ET outside an editing term");
        break;
      case Edit::Pop:
        if (!in_et) throw DataError(where + "Pop without a Push");
        in_et = false;
        break;
    }
    if (p.edit == Edit::Pop) {
      if (p.repair == RepairTag::Null) throw DataError(where + "Pop without a repair tag");
    } else if (p.edit != Edit::Null) {
      if (p.repair != RepairTag::Null) throw DataError(where + "repair inside an editing term");
    } else if (p.repair == RepairTag::Abr) {
      throw DataError(where + "abridged repair without an editing term");
    }
    const bool has_onset = p.repair == RepairTag::Mod || p.repair == RepairTag::Can;
    const int ip = p.edit == Edit::Pop ? push_pos : i;
    if (has_onset != (p.onset >= 0)) throw DataError(where + "onset defined iff R is M or C");
    if (has_onset && p.onset >= ip) throw DataError(where + "onset not before the ip");

    if (p.edit == Edit::Push || p.repair != RepairTag::Null) w_onset = -1;
    if (has_onset) {
      w_onset = p.onset;
      w_ip = ip;
      w_end = i + (ip - p.onset);
      w_next = p.onset;
    }
    const bool active = w_onset >= 0 && i < w_end;
    if (p.corr == Corr::None) {
      if (p.license >= 0) throw DataError(where + "license without a correspondence tag");
      continue;
    }
    if (!active) throw DataError(where + "correspondence outside a repair");
    if (p.license < w_next || p.license > w_ip)
      throw DataError(where + "license outside the candidate range");
    if (p.corr == Corr::Unmatched) {
      if (p.license != w_next) throw DataError(where + "x must license the next candidate");
    } else {
      if (p.license >= w_ip) throw DataError(where + "correspondence past the reparandum");
      w_next = p.license + 1;
    }
  }
  if (in_et) throw DataError("editing term open at turn end");
}

TagSequence mask_tags(TagSequence tags, const TagMask& mask) {
  for (auto& p : tags.at) {
    if (!mask.tones) p.tone = Tone::Null;
    if (!mask.repairs) {
      p.edit = Edit::Null;
      p.repair = RepairTag::Null;
    }
    if (!mask.repairs || !mask.corrections) {
      p.onset = -1;
      p.license = -1;
      p.corr = Corr::None;
    }
  }
  if (!mask.tones) tags.final_tone = false;
  return tags;
}

void apply_tags(AnnotatedTurn& turn, const TagSequence& tags, const Tagset& tagset) {
  const int n = turn.size();
  if (tags.size() != n) throw DataError("tag sequence length mismatch");
  for (int i = 0; i < n; ++i)
    turn.tokens[static_cast<std::size_t>(i)].pos = tagset.name(tags.pos[static_cast<std::size_t>(i)]);
  turn.tones.clear();
  for (int i = 1; i <= n; ++i)
    if (tags.tone(i) == Tone::T) turn.tones.push_back(i);
  turn.repairs.clear();
  int push_pos = -1;
  int active = -1;  // index into turn.repairs
  int w_end = -1;
  for (int i = 0; i < n; ++i) {
    const auto& p = tags.at[static_cast<std::size_t>(i)];
    if (p.edit == Edit::Push) {
      push_pos = i;
      active = -1;
    }
    if (p.repair != RepairTag::Null) {
      active = -1;
      RepairAnnotation r;
      r.kind = kind_of(p.repair);
      r.ip = p.edit == Edit::Pop ? push_pos : i;
      if (p.edit == Edit::Pop) r.editing_term = {push_pos, i};
      if (p.onset >= 0) r.reparandum = {p.onset, r.ip};
      // corrections disabled: the extent is unknown, keep the format valid
      else if (p.repair != RepairTag::Abr) r.reparandum = {r.ip - 1, r.ip};
      turn.repairs.push_back(std::move(r));
      if (p.onset >= 0) {
        active = static_cast<int>(turn.repairs.size()) - 1;
        w_end = i + (turn.repairs.back().ip - p.onset);
      }
    }
    if (active >= 0 && i < w_end && (p.corr == Corr::Match || p.corr == Corr::Replace))
      turn.repairs[static_cast<std::size_t>(active)].correspondences.push_back(
          {p.license, i, p.corr == Corr::Match ? CorrKind::Match : CorrKind::Replace});
  }
}

std::string render_tags(const AnnotatedTurn& turn, const TagSequence& tags) {
  std::ostringstream out;
  bool first = true;
  auto emit = [&](std::string_view s) {
    if (!first) out << ' ';
    out << s;
    first = false;
  };
  for (int i = 0; i < turn.size(); ++i) {
    const auto& p = tags.at[static_cast<std::size_t>(i)];
    if (p.tone == Tone::T) emit("T");
    if (p.edit != Edit::Null) emit(edit_name(p.edit));
    if (p.repair != RepairTag::Null) emit(repair_name(p.repair));
    emit(turn.tokens[static_cast<std::size_t>(i)].surface);
  }
  if (tags.final_tone) emit("T");
  return out.str();
}

}  // namespace dlm
