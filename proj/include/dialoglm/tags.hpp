// include/dialoglm/tags.hpp
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
#include <string>
#include <vector>

#include "dialoglm/corpus.hpp"

namespace dlm {

enum class Tone : std::uint8_t { Null, T };
enum class Edit : std::uint8_t { Null, Push, ET, Pop };
enum class RepairTag : std::uint8_t { Null, Mod, Can, Abr };
// None means the position carries no L/C pair; Unmatched is x.
enum class Corr : std::uint8_t { None, Match, Replace, Unmatched };

inline constexpr int kNumTone = 2;
inline constexpr int kNumEdit = 4;
inline constexpr int kNumRepair = 4;

/// Tags of the null token in front of word i.
struct PositionTags {
  Tone tone = Tone::Null;
  Edit edit = Edit::Null;
  RepairTag repair = RepairTag::Null;
  int onset = -1;    // reparandum onset, R in {M, C}
  int license = -1;  // licensing reparandum word
  Corr corr = Corr::None;

  bool operator==(const PositionTags&) const = default;
};

struct TagSequence {
  std::vector<PositionTags> at;  // one per word
  bool final_tone = false;       // T after the last word
  std::vector<TagId> pos;

  int size() const { return static_cast<int>(at.size()); }
  Tone tone(int position) const;  // position in [0, size()]
  bool operator==(const TagSequence&) const = default;
};

const char* tone_name(Tone t);
const char* edit_name(Edit e);
const char* repair_name(RepairTag r);
const char* corr_name(Corr c);

/// Gold tags implied by a turn's annotation.  POS ids come from `tagset`.
TagSequence derive_tags(const AnnotatedTurn& turn, const Tagset& tagset);

/// Throws DataError when `tags` breaks a structural invariant.
void check_tag_invariants(const TagSequence& tags);

/// Which tag families are modeled.  Corrections require repairs.
struct TagMask {
  bool tones = true;
  bool repairs = true;
  bool corrections = true;

  bool operator==(const TagMask&) const = default;
};

TagSequence mask_tags(TagSequence tags, const TagMask& mask);

/// Rebuilds repair annotations and tones from a tag sequence (used to write
/// decoded turns back out).  Correspondences come from L/C pairs.
void apply_tags(AnnotatedTurn& turn, const TagSequence& tags, const Tagset& tagset);

/// One-line rendering: words interleaved with non-null tags.
std::string render_tags(const AnnotatedTurn& turn, const TagSequence& tags);

}  // namespace dlm
