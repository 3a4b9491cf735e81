// include/dialoglm/history.hpp
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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dialoglm/corpus.hpp"
#include "dialoglm/tags.hpp"

namespace dlm {

/// One entry of the encoded context: a word with its POS tag, or a
/// non-null tag value acting as a pseudo word with its reserved POS tag.
/// (position, order) orders items inside a turn; cleanup removes suffixes
/// of that order.
struct Item {
  int position = 0;
  int order = 0;  // -1 turn begin, 0 tone, 1 Push/Pop, 2 repair, 3 word
  TagId tag = 0;
  int token = -1;  // token index for words, -1 for pseudo items

  bool is_word() const { return token >= 0; }
  bool operator==(const Item&) const = default;
};

struct ContextFeatures {
  bool in_editing_term = false;
  bool nonfilledpause_et_seen = false;
  bool cand_has_discourse_marker = false;
  bool cand_has_unattached_filled_pause = false;
  bool cand_has_boundary_tone = false;
  bool cand_overlaps_prior_repair = false;

  bool operator==(const ContextFeatures&) const = default;
};

/// Interpretation of a turn prefix, advanced one tag at a time in the
/// chain-rule order T, E, R, O, L, C, P, W.  Training walks it along gold
/// tags; the decoder keeps one per hypothesis.
class TurnState {
 public:
  TurnState() = default;
  TurnState(const Tagset& tagset, int turn_length, bool corrections);

  int position() const { return pos_; }
  int length() const { return n_; }
  bool corrections() const { return corrections_; }
  const std::vector<Item>& items() const { return items_; }

  // stage transitions for position() ------------------------------------
  void set_tone(Tone t);
  void set_edit(Edit e);
  void set_repair(RepairTag r);
  void set_onset(int onset);
  void set_license(int license, Corr c);
  void set_word(TagId tag);

  // current position tags
  Tone tone() const { return cur_.tone; }
  Edit edit() const { return cur_.edit; }
  RepairTag repair() const { return cur_.repair; }
  int onset() const { return cur_.onset; }
  int license() const { return cur_.license; }
  Corr corr() const { return cur_.corr; }

  bool in_editing_term() const { return in_et_; }
  bool nonfilledpause_et_seen() const { return npfp_; }
  /// Interruption point of a repair tagged at the current position.
  int repair_ip() const { return cur_.edit == Edit::Pop ? et_start_ : pos_; }
  bool has_editing_term() const { return cur_.edit == Edit::Pop; }

  /// Reparandum-onset candidates for an M or C repair at this position.
  std::vector<int> onset_candidates(RepairTag r, int mod_window) const;
  /// True while L/C tags are due at the current position.
  bool window_active() const;
  int window_alt_offset() const { return pos_ - w_alt_; }
  int window_next() const { return w_next_; }
  int window_ip() const { return w_ip_; }
  RepairTag window_kind() const { return w_kind_; }
  Corr window_prev_corr() const { return w_prev_; }
  /// Reparandum words after the last correspondence.
  std::vector<int> license_candidates() const;

  ContextFeatures features(std::optional<Span> candidate = std::nullopt) const;

  TagId token_tag(int k) const { return tags_[static_cast<std::size_t>(k)]; }
  bool tone_at(int p) const { return tone_at_[static_cast<std::size_t>(p)] != 0; }
  int last_tone_before(int ip) const;

  std::size_t hash() const;
  bool operator==(const TurnState& o) const;

 private:
  void cleanup_from(int position, int order);

  const Tagset* tagset_ = nullptr;
  int n_ = 0;
  int pos_ = 0;
  bool corrections_ = true;
  std::vector<Item> items_;
  std::vector<TagId> tags_;              // per finished token
  std::vector<std::uint8_t> member_;     // per token: 1 editing term, 2 repair
  std::vector<std::uint8_t> tone_at_;    // per position 0..pos
  PositionTags cur_;
  bool in_et_ = false;
  bool npfp_ = false;
  int et_start_ = -1;
  int fs_floor_ = 0;
  // L/C window of the active M/C repair
  int w_onset_ = -1, w_ip_ = -1, w_alt_ = -1, w_end_ = -1, w_next_ = -1;
  RepairTag w_kind_ = RepairTag::Null;
  Corr w_prev_ = Corr::None;
};

/// Gold walk: the cleaned encoded context in front of word `i` (after its
/// own T/E/R/O/L/C tags are applied).  `corrections` false disables
/// reparandum cleanup.
std::vector<Item> encode_context(const AnnotatedTurn& turn, const TagSequence& tags,
                                 const Tagset& tagset, int i, bool corrections = true);

/// "w/TAG" for words and the pseudo surface for tag items; the turn-begin
/// item is omitted.
std::string render_items(const std::vector<Item>& items, const AnnotatedTurn& turn,
                         const Tagset& tagset);

/// Walks `state` through all tags of position i.
void advance(TurnState& state, const TagSequence& tags, int i);

}  // namespace dlm
