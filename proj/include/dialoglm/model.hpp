// include/dialoglm/model.hpp
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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialoglm/clustering.hpp"
#include "dialoglm/corpus.hpp"
#include "dialoglm/dtree.hpp"
#include "dialoglm/history.hpp"
#include "dialoglm/silence.hpp"
#include "dialoglm/tags.hpp"

namespace dlm {

enum class Stage : int { T, E, R, O, L, C, P, W };
inline constexpr int kNumStages = 8;
const char* stage_name(Stage s);

struct ModelConfig {
  TagMask mask;
  bool silences = true;
  double heldout_fraction = 0.25;
  std::uint64_t seed = 1;
  TreeParams tree;
  std::vector<double> silence_edges = default_silence_edges();
  int mod_onset_window = 10;
  double unk_divisor = 1.0;
  int vocab_min_count = 2;

  /// Throws UsageError on contradictory settings.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(mask.tones, mask.repairs, mask.corrections, silences, heldout_fraction, seed, tree,
       silence_edges, mod_onset_window, unk_divisor, vocab_min_count);
  }
};

/// What the decoder sees of a turn: surfaces, fragment flags, silences.
struct TurnInput {
  std::vector<std::string> surfaces;
  std::vector<int> words;  // lexicon ids, -1 unknown
  std::vector<std::uint8_t> fragment;
  std::vector<double> silence;  // before each word

  int size() const { return static_cast<int>(surfaces.size()); }
};

/// Per-position factors of the chain rule; unset O/L/C mean "undefined"
/// and count as 1.
struct FactorRow {
  double t = 1.0, e = 1.0, r = 1.0;
  std::optional<double> o, l, c;
  double p = 1.0, w = 1.0;

  double product() const;
};

/// Product of all rows.  The worked examples inject factors directly.
double joint_probability(const std::vector<FactorRow>& rows);

/// Indices of the dialogs held out for smoothing: a seeded shuffle, the
/// first round(fraction * n) (at least one, leaving at least one).
std::vector<std::size_t> heldout_dialogs(std::size_t num_dialogs, double fraction,
                                         std::uint64_t seed);

/// Value indices of the C distribution.
enum CorrOutcome : int { kCorrM = 0, kCorrR = 1, kCorrX = 2 };

class JointModel {
 public:
  JointModel() = default;

  static JointModel train(const std::vector<const AnnotatedTurn*>& growth,
                          const std::vector<const AnnotatedTurn*>& heldout, const Tagset& tagset,
                          const ModelConfig& config);
  /// Splits dialogs into growth and heldout parts from config.seed.
  static JointModel train(const Corpus& corpus, const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const Tagset& tagset() const { return tagset_; }
  const Lexicon& lexicon() const { return lexicon_; }
  const ClusterSet& clusters() const { return clusters_; }
  const SilenceModel& silence() const { return silence_; }
  const ProbTree& tree(Stage s) const;  // not W
  const std::map<TagId, ProbTree>& word_trees() const { return word_trees_; }
  /// Real tags P can emit (tags seen in training), in outcome order.
  const std::vector<TagId>& pos_outcomes() const { return pos_outcomes_; }
  /// Lexicon ids W can emit for `tag`, in outcome order (then UNK, COPY).
  const std::vector<int>& word_outcomes(TagId tag) const;
  void set_silence(const SilenceModel& s) { silence_ = s; }

  TurnInput make_input(const AnnotatedTurn& turn) const;

  // Distributions at state.position(); all restricted to admissible values
  // and renormalized. ----------------------------------------------------
  std::array<double, kNumTone> tone_probs(const TurnState& s, const TurnInput& in) const;
  std::array<double, kNumEdit> edit_probs(const TurnState& s, const TurnInput& in) const;
  std::array<double, kNumRepair> repair_probs(const TurnState& s, const TurnInput& in) const;
  /// Whether R may take M or C at the current position.
  bool mc_admissible(const TurnState& s) const;
  std::vector<int> onset_candidates(const TurnState& s) const;
  std::vector<double> onset_probs(const TurnState& s, const TurnInput& in,
                                  const std::vector<int>& candidates) const;
  std::vector<double> license_probs(const TurnState& s, const TurnInput& in,
                                    const std::vector<int>& candidates) const;
  std::array<double, 3> corr_probs(const TurnState& s, const TurnInput& in, int license) const;
  /// Indexed by TagId over real tags.
  std::vector<double> pos_probs(const TurnState& s, const TurnInput& in) const;
  /// Probability of the current word's surface under `tag`.
  double word_prob(const TurnState& s, const TurnInput& in, TagId tag) const;
  /// Tags that can emit word i outside a copy: fragment flag matches and
  /// the word is in the tag's vocabulary or unknown.  Ascending.
  std::vector<TagId> emitting_tags(const TurnInput& in, int i) const;
  /// Distribution over lexicon ids plus UNK (last); the copy mass goes to
  /// the licensed word's entry (or UNK).
  std::vector<double> word_dist(const TurnState& s, const TurnInput& in, TagId tag) const;

  /// Tree output before admissibility masking and silence adjustment.
  std::vector<double> raw_distribution(Stage st, const TurnState& s, const TurnInput& in) const;
  /// Silence factor for a silence class at the current position (1 when
  /// silences are off, at the first word and at the turn end).
  double silence_factor(int silence_class, const TurnState& s, const TurnInput& in) const;

  /// Chain-rule factors for gold tags; throws DataError if the tags are
  /// inadmissible under the model (e.g. onset outside the candidate range).
  std::vector<FactorRow> factor_rows(const AnnotatedTurn& turn, const TagSequence& tags) const;
  double log_joint_probability(const AnnotatedTurn& turn, const TagSequence& tags) const;

  // Context encoding, exposed for tests and tools. -----------------------
  Context context(Stage st, const TurnState& s, const TurnInput& in, int candidate = -1) const;
  Code item_code(const Item& it, const TurnInput& in) const;
  Code token_code(int k, const TurnState& s, const TurnInput& in) const;
  static ContextSchema schema(Stage st);
  std::vector<std::string> outcome_names(Stage st, TagId tag = -1) const;

  struct Events {
    std::array<std::vector<Event>, kNumStages - 1> stage;  // T..P
    std::map<TagId, std::vector<Event>> word;
  };
  /// Training events of gold-tagged turns under this model's encoders.
  Events extract_events(const std::vector<const AnnotatedTurn*>& turns) const;

  bool operator==(const JointModel& o) const;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(config_, tagset_, lexicon_, clusters_, silence_, trees_, word_trees_, pos_outcomes_,
       word_vocab_);
    rebuild_tables();
  }

 private:
  void rebuild_tables();
  int word_outcome(TagId tag, int word) const;  // -1 if not emitted

  ModelConfig config_;
  Tagset tagset_;
  Lexicon lexicon_;
  ClusterSet clusters_;
  SilenceModel silence_;
  std::array<ProbTree, kNumStages - 1> trees_;
  std::map<TagId, ProbTree> word_trees_;
  std::vector<TagId> pos_outcomes_;
  std::map<TagId, std::vector<int>> word_vocab_;

  // lookup tables
  std::vector<Code> pos_code_;                  // per tag
  std::vector<std::vector<Code>> word_code_;    // [tag][word + 1]
  std::vector<std::vector<int>> word_index_;    // [tag][word + 1] -> outcome or -1
  std::vector<int> pos_index_;                  // tag -> P outcome or -1
  std::vector<std::uint8_t> compatible_known_;  // per lexicon word: seen as non-fragment/fragment
};

}  // namespace dlm
