// include/dialoglm/eval.hpp
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
#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dialoglm/corpus.hpp"
#include "dialoglm/decoder.hpp"
#include "dialoglm/model.hpp"
#include "dialoglm/ngram.hpp"
#include "dialoglm/tags.hpp"

namespace dlm {

enum class EventKind { Tone, TurnInternalTone, RepairDetection, RepairCorrection, DiscourseMarker };
inline constexpr int kNumEventKinds = 5;
const char* event_kind_name(EventKind k);

/// Turn index plus between-word position (tones, repairs: the ip) or word
/// index (discourse markers).  `extent` is the reparandum onset for
/// correction events and -1 otherwise.
struct EventId {
  int turn = 0;
  int position = 0;
  int extent = -1;
  auto operator<=>(const EventId&) const = default;
};

struct EventSet {
  EventKind kind = EventKind::Tone;
  std::set<EventId> ids;
};

struct Prf {
  double recall = 1.0;
  double precision = 1.0;
  double error_rate = 0.0;  // +inf when there is no gold event but some guess
};

/// Throws UsageError when the kinds differ.
Prf prf(const EventSet& gold, const EventSet& predicted);

struct EventCounts {
  std::size_t gold = 0, predicted = 0, correct = 0;

  Prf metrics() const;
  EventCounts& operator+=(const EventCounts& o);
  bool operator==(const EventCounts&) const = default;
};

EventCounts count_events(const EventSet& gold, const EventSet& predicted);

/// A detected repair read off a tag sequence.
struct RepairSite {
  int ip = 0;
  RepairTag kind = RepairTag::Null;
  int onset = -1;  // reparandum onset; ip for abridged repairs; -1 unknown
};
std::vector<RepairSite> repair_sites(const TagSequence& tags);

/// Events of one kind in a tagged turn.  `tagset` names the POS ids.
EventSet turn_events(EventKind kind, int turn_index, const TagSequence& tags, const Tagset& tagset);
void add_turn_events(EventSet& set, int turn_index, const TagSequence& tags, const Tagset& tagset);

/// Fraction of positions whose tags differ, skipping positions whose gold
/// tag is pseudo-lexical.  Throws DataError on a length mismatch.
double pos_error_rate(const std::vector<TagId>& gold, const std::vector<TagId>& predicted,
                      const Tagset& tagset);

/// Counts of one evaluation run (a fold, or all folds pooled).
struct EvalCounts {
  std::size_t turns = 0;
  std::size_t words = 0;
  std::array<EventCounts, kNumEventKinds> events{};
  std::size_t pos_errors = 0;
  PerplexityResult perplexity;  // marginal over beam hypotheses
  PerplexityResult best_path;   // joint probability of the decoded tags
  PerplexityResult trigram;     // words == 0 when no baseline was run

  const EventCounts& operator[](EventKind k) const { return events[static_cast<std::size_t>(k)]; }
  double pos_error_rate() const;
  EvalCounts& operator+=(const EvalCounts& o);
};

/// Decodes every turn and compares against its annotation.  `baseline` may
/// be null.
EvalCounts evaluate(const JointModel& model, const NgramModel* baseline,
                    const std::vector<const AnnotatedTurn*>& turns, const BeamOptions& beam);

/// Dialog index ranges [begin, end) of k contiguous folds.
std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t num_dialogs, int k);

struct FoldReport {
  std::vector<std::string> dialogs;
  EvalCounts counts;
};

struct MetricsReport {
  ModelConfig config;
  BeamOptions beam;
  NgramConfig baseline;
  std::vector<FoldReport> folds;
  EvalCounts total;  // pooled over folds
};

/// Trains on all but one contiguous fold (with the model's own heldout
/// split), evaluates on it, and pools the counts.
MetricsReport cross_validate(const Corpus& corpus, int k, const ModelConfig& config,
                             const BeamOptions& beam, const NgramConfig& baseline = {});

inline constexpr int kReportSchemaVersion = 1;
/// Deterministic JSON; infinities are written as the string "inf".
std::string report_json(const MetricsReport& report);
/// Several labelled reports (table columns) in one document.
std::string report_json(const std::vector<std::pair<std::string, const MetricsReport*>>& columns);

enum class TableKind { Pos, Tones, Repairs };
/// Plain-text table with one column per labelled report.
std::string render_table(TableKind kind,
                         const std::vector<std::pair<std::string, const MetricsReport*>>& columns);

/// Ablation columns of a table: labels and configs derived from `base`.
std::vector<std::pair<std::string, ModelConfig>> table_columns(TableKind kind,
                                                               const ModelConfig& base);

}  // namespace dlm
