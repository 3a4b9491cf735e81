// src/history.cpp
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

#include "dialoglm/history.hpp"

#include <algorithm>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

TurnState::TurnState(const Tagset& tagset, int turn_length, bool corrections)
    : tagset_(&tagset), n_(turn_length), corrections_(corrections) {
  items_.push_back(Item{0, -1, tagset.pseudo(PseudoTag::Turn), -1});
  tags_.reserve(static_cast<std::size_t>(n_));
  member_.reserve(static_cast<std::size_t>(n_));
  tone_at_.reserve(static_cast<std::size_t>(n_) + 1);
}

void TurnState::cleanup_from(int position, int order) {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Item& x) {
    return x.position > position || (x.position == position && x.order >= order);
  });
  items_.erase(it, items_.end());
}

void TurnState::set_tone(Tone t) {
  cur_ = PositionTags{};
  cur_.tone = t;
  tone_at_.push_back(t == Tone::T ? 1 : 0);
  if (t == Tone::T) items_.push_back(Item{pos_, 0, tagset_->pseudo(PseudoTag::Tone), -1});
}

void TurnState::set_edit(Edit e) {
  cur_.edit = e;
  switch (e) {
    case Edit::Push:
      in_et_ = true;
      npfp_ = false;
      et_start_ = pos_;
      w_onset_ = -1;
      items_.push_back(Item{pos_, 1, tagset_->pseudo(PseudoTag::Push), -1});
      break;
    case Edit::Pop:
      in_et_ = false;
      items_.push_back(Item{pos_, 1, tagset_->pseudo(PseudoTag::Pop), -1});
      break;
    default: break;
  }
}

void TurnState::set_repair(RepairTag r) {
  cur_.repair = r;
  if (r == RepairTag::Null) return;
  w_onset_ = -1;
  const int ip = repair_ip();
  if (r == RepairTag::Abr) {
    cleanup_from(ip, 1);
    return;
  }
  if (!corrections_) {
    if (r == RepairTag::Can) fs_floor_ = pos_;
    if (has_editing_term()) cleanup_from(ip, 1);
    items_.push_back(Item{pos_, 2,
                          tagset_->pseudo(r == RepairTag::Mod ? PseudoTag::Mod : PseudoTag::Can),
                          -1});
  }
}

void TurnState::set_onset(int onset) {
  cur_.onset = onset;
  const int ip = repair_ip();
  int from = onset;
  if (cur_.repair == RepairTag::Can) from = std::min(onset, last_tone_before(ip));
  cleanup_from(from, 1);
  for (int k = onset; k < ip; ++k) member_[static_cast<std::size_t>(k)] |= 2;
  w_onset_ = onset;
  w_ip_ = ip;
  w_alt_ = pos_;
  w_end_ = pos_ + (ip - onset);
  w_next_ = onset;
  w_kind_ = cur_.repair;
  w_prev_ = Corr::None;
  if (cur_.repair == RepairTag::Can) fs_floor_ = pos_;
}

void TurnState::set_license(int license, Corr c) {
  cur_.license = license;
  cur_.corr = c;
  if (c == Corr::Match || c == Corr::Replace) w_next_ = license + 1;
  w_prev_ = c;
}

void TurnState::set_word(TagId tag) {
  tags_.push_back(tag);
  std::uint8_t m = 0;
  if (in_et_) m |= 1;
  if (cur_.corr != Corr::None) m |= 2;
  member_.push_back(m);
  if (in_et_ && !tagset_->info(tag).is_filled_pause) npfp_ = true;
  if (cur_.edit == Edit::Pop) npfp_ = false;
  if (!in_et_) et_start_ = -1;
  items_.push_back(Item{pos_, 3, tag, pos_});
  ++pos_;
  if (w_onset_ >= 0 && pos_ >= w_end_) {
    w_onset_ = w_ip_ = w_alt_ = w_end_ = w_next_ = -1;
    w_kind_ = RepairTag::Null;
    w_prev_ = Corr::None;
  }
}

int TurnState::last_tone_before(int ip) const {
  for (int p = std::min(ip - 1, static_cast<int>(tone_at_.size()) - 1); p > 0; --p)
    if (tone_at_[static_cast<std::size_t>(p)]) return p;
  return 0;
}

std::vector<int> TurnState::onset_candidates(RepairTag r, int mod_window) const {
  const int ip = repair_ip();
  int lo = fs_floor_;
  if (r == RepairTag::Mod) lo = std::max(lo, ip - mod_window);
  else lo = std::max(lo, last_tone_before(ip));
  std::vector<int> out;
  for (int o = std::max(lo, 0); o < ip; ++o) out.push_back(o);
  return out;
}

bool TurnState::window_active() const { return w_onset_ >= 0 && pos_ < w_end_ && pos_ < n_; }

std::vector<int> TurnState::license_candidates() const {
  std::vector<int> out;
  if (!window_active()) return out;
  for (int k = w_next_; k < w_ip_; ++k) out.push_back(k);
  return out;
}

ContextFeatures TurnState::features(std::optional<Span> candidate) const {
  ContextFeatures f;
  f.in_editing_term = in_et_;
  f.nonfilledpause_et_seen = npfp_;
  if (!candidate) return f;
  for (int k = candidate->begin; k < candidate->end; ++k) {
    const auto& info = tagset_->info(tags_.at(static_cast<std::size_t>(k)));
    const auto m = member_[static_cast<std::size_t>(k)];
    if (info.is_discourse_marker) f.cand_has_discourse_marker = true;
    if (info.is_filled_pause && !(m & 1)) f.cand_has_unattached_filled_pause = true;
    if (m != 0) f.cand_overlaps_prior_repair = true;
    if (tone_at(k + 1)) f.cand_has_boundary_tone = true;
  }
  return f;
}

namespace {

inline void mix(std::size_t& h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

}  // namespace

std::size_t TurnState::hash() const {
  std::size_t h = static_cast<std::size_t>(pos_);
  for (const auto& it : items_) {
    mix(h, static_cast<std::size_t>(it.position));
    mix(h, static_cast<std::size_t>(it.order + 1));
    mix(h, static_cast<std::size_t>(it.tag));
  }
  for (auto t : tags_) mix(h, static_cast<std::size_t>(t));
  for (auto m : member_) mix(h, m);
  for (auto t : tone_at_) mix(h, t);
  mix(h, (in_et_ ? 1u : 0u) | (npfp_ ? 2u : 0u));
  mix(h, static_cast<std::size_t>(et_start_ + 1));
  mix(h, static_cast<std::size_t>(fs_floor_));
  mix(h, static_cast<std::size_t>(w_onset_ + 1));
  mix(h, static_cast<std::size_t>(w_next_ + 1));
  mix(h, static_cast<std::size_t>(w_prev_));
  return h;
}

// Equality over everything that can influence later factors.  The tags of
// the position just finished are not part of it.
bool TurnState::operator==(const TurnState& o) const {
  return pos_ == o.pos_ && n_ == o.n_ && in_et_ == o.in_et_ && npfp_ == o.npfp_ &&
         et_start_ == o.et_start_ && fs_floor_ == o.fs_floor_ && w_onset_ == o.w_onset_ &&
         w_ip_ == o.w_ip_ && w_alt_ == o.w_alt_ && w_end_ == o.w_end_ && w_next_ == o.w_next_ &&
         w_kind_ == o.w_kind_ && w_prev_ == o.w_prev_ && items_ == o.items_ &&
         tags_ == o.tags_ && member_ == o.member_ && tone_at_ == o.tone_at_;
}

void advance(TurnState& state, const TagSequence& tags, int i) {
  if (i == tags.size()) {
    state.set_tone(tags.final_tone ? Tone::T : Tone::Null);
    return;
  }
  const auto& p = tags.at[static_cast<std::size_t>(i)];
  state.set_tone(p.tone);
  state.set_edit(p.edit);
  state.set_repair(p.repair);
  if (state.corrections() && p.onset >= 0) state.set_onset(p.onset);
  if (state.corrections() && p.corr != Corr::None) state.set_license(p.license, p.corr);
  state.set_word(tags.pos[static_cast<std::size_t>(i)]);
}

std::vector<Item> encode_context(const AnnotatedTurn& turn, const TagSequence& tags,
                                 const Tagset& tagset, int i, bool corrections) {
  if (i < 0 || i > turn.size()) throw DataError("context position out of range");
  TurnState s(tagset, turn.size(), corrections);
  for (int k = 0; k < i; ++k) advance(s, tags, k);
  if (i == turn.size()) return s.items();
  const auto& p = tags.at[static_cast<std::size_t>(i)];
  s.set_tone(p.tone);
  s.set_edit(p.edit);
  s.set_repair(p.repair);
  if (corrections && p.onset >= 0) s.set_onset(p.onset);
  if (corrections && p.corr != Corr::None) s.set_license(p.license, p.corr);
  return s.items();
}

std::string render_items(const std::vector<Item>& items, const AnnotatedTurn& turn,
                         const Tagset& tagset) {
  std::ostringstream out;
  bool first = true;
  for (const auto& it : items) {
    if (it.order < 0) continue;
    if (!first) out << ' ';
    first = false;
    if (it.is_word()) {
      out << turn.tokens.at(static_cast<std::size_t>(it.token)).surface << '/'
          << tagset.name(it.tag);
    } else {
      auto pt = static_cast<PseudoTag>(it.tag - tagset.num_real());
      out << Tagset::pseudo_surface(pt);
    }
  }
  return out.str();
}

}  // namespace dlm
