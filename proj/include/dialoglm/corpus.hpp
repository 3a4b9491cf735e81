// include/dialoglm/corpus.hpp
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

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dlm {

/// Half-open token index range [begin, end).
struct Span {
  int begin = 0;
  int end = 0;

  bool empty() const { return begin >= end; }
  int size() const { return empty() ? 0 : end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }
  bool operator==(const Span&) const = default;
};

struct Token {
  std::string surface;
  std::string pos;
  bool is_fragment = false;
  double silence_before = 0.0;  // seconds, millisecond resolution

  bool operator==(const Token&) const = default;
};

enum class RepairKind { FreshStart, Modification, Abridged };

enum class CorrKind { Match, Replace };

/// One m/r link between a reparandum word and an alteration word.
struct Correspondence {
  int reparandum = 0;
  int alteration = 0;
  CorrKind kind = CorrKind::Match;

  bool operator==(const Correspondence&) const = default;
};

struct RepairAnnotation {
  RepairKind kind = RepairKind::Modification;
  int ip = 0;  // between-word position: after token ip-1
  Span reparandum;
  Span editing_term;
  std::vector<Correspondence> correspondences;

  /// First alteration token: the word right after the editing term.
  int alteration_onset() const { return editing_term.empty() ? ip : editing_term.end; }

  bool operator==(const RepairAnnotation&) const = default;
};

struct AnnotatedTurn {
  std::string speaker;
  std::string utterance_id;
  std::vector<Token> tokens;
  std::vector<int> tones;  // sorted between-word positions in [1, tokens.size()]
  std::vector<RepairAnnotation> repairs;  // sorted by ip

  int size() const { return static_cast<int>(tokens.size()); }
  bool has_tone(int position) const;
  bool operator==(const AnnotatedTurn&) const = default;
};

struct Dialog {
  std::string id;
  std::vector<AnnotatedTurn> turns;

  bool operator==(const Dialog&) const = default;
};

// ---------------------------------------------------------------------------
// Tagset

using TagId = int;

enum class PseudoTag { Turn, Tone, Push, Pop, Mod, Can, Abr };
inline constexpr int kNumPseudoTags = 7;

struct TagInfo {
  std::string name;
  bool is_discourse_marker = false;
  bool is_filled_pause = false;
  bool is_fragment = false;
  bool is_pseudo = false;

  bool operator==(const TagInfo&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(name, is_discourse_marker, is_filled_pause, is_fragment, is_pseudo);
  }
};

/// POS tags in a fixed order: real tags sorted by name, then the reserved
/// pseudo-lexical tags.  Flags follow the naming convention of the tagset:
/// `*_D` and `AC` mark discourse markers, `UH_FP` filled pauses, `FRAGMENT`
/// word fragments.
class Tagset {
 public:
  Tagset() = default;
  explicit Tagset(const std::set<std::string>& real_tags);

  static TagInfo classify(const std::string& name);
  static std::string_view pseudo_name(PseudoTag t);
  static std::string_view pseudo_surface(PseudoTag t);

  int size() const { return static_cast<int>(tags_.size()); }
  int num_real() const { return num_real_; }
  const TagInfo& info(TagId id) const { return tags_.at(static_cast<std::size_t>(id)); }
  const std::string& name(TagId id) const { return info(id).name; }
  std::optional<TagId> find(const std::string& name) const;
  TagId id(const std::string& name) const;  // throws DataError if unknown
  TagId pseudo(PseudoTag t) const { return num_real_ + static_cast<int>(t); }
  std::optional<TagId> fragment_tag() const { return find("FRAGMENT"); }
  const std::vector<TagInfo>& all() const { return tags_; }

  bool operator==(const Tagset&) const = default;

  template <class Archive>
  void serialize(Archive& ar) {
    ar(tags_, num_real_);
    index_.clear();
    for (std::size_t i = 0; i < tags_.size(); ++i) index_[tags_[i].name] = static_cast<int>(i);
  }

 private:
  std::vector<TagInfo> tags_;
  int num_real_ = 0;
  std::map<std::string, int> index_;
};

struct Corpus {
  std::vector<Dialog> dialogs;
  std::set<std::string> vocabulary;
  Tagset tagset;

  /// Recomputes vocabulary and tagset from the dialogs.
  void refresh();
  std::size_t num_turns() const;
  std::size_t num_words() const;
  bool operator==(const Corpus&) const = default;
};

Corpus make_corpus(std::vector<Dialog> dialogs);

/// Checks every AnnotatedTurn invariant; throws DataError describing the
/// first violation.
void validate_turn(const AnnotatedTurn& turn);

Corpus parse_corpus(std::istream& in);
Corpus parse_corpus(std::string_view text);
Corpus read_corpus_file(const std::string& path);

void serialize_corpus(std::ostream& out, const Corpus& corpus);
std::string serialize_corpus(const Corpus& corpus);
void write_turn(std::ostream& out, const AnnotatedTurn& turn);

std::string_view repair_kind_code(RepairKind k);

struct CorpusStats {
  std::size_t dialogs = 0;
  std::size_t speakers = 0;
  std::size_t words = 0;
  std::size_t turns = 0;
  std::size_t discourse_markers = 0;
  std::size_t tones = 0;
  std::size_t turn_internal_tones = 0;
  std::size_t abridged_repairs = 0;
  std::size_t modification_repairs = 0;
  std::size_t fresh_starts = 0;
  std::size_t editing_terms = 0;

  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const Corpus& corpus);

/// Closed training vocabulary; words outside it map to -1 (UNK).
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<std::string> words);  // sorted, unique

  int size() const { return static_cast<int>(words_.size()); }
  int id(const std::string& w) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }
  bool operator==(const Lexicon& o) const { return words_ == o.words_; }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(words_);
    index_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
  }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

/// Words occurring at least `min_count` times.
Lexicon build_lexicon(const std::vector<const AnnotatedTurn*>& turns, int min_count);

}  // namespace dlm
