// include/dialoglm/decoder.hpp
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
#include <functional>
#include <limits>
#include <vector>

#include "dialoglm/model.hpp"
#include "dialoglm/perplexity.hpp"

namespace dlm {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct BeamOptions {
  int width = 40;        // <= 0: unbounded
  double margin = 12.0;  // nats below the best hypothesis; infinity disables

  bool unbounded() const { return width <= 0 && margin == kInfinity; }
};

struct DecodeResult {
  TagSequence tags;
  double log_prob = -kInfinity;  // natural log of the joint probability
};

/// One interpretation of position i: its tags, POS tag and the state after
/// the word.
struct Extension {
  TurnState state;
  PositionTags tags;
  TagId pos = -1;
  double log_factor = 0.0;  // sum of the logs of T, E, R, O, L, C, P, W
};

/// Calls `f` for every interpretation of the word at state.position() with
/// nonzero probability, in a fixed order.
void expand(const JointModel& model, const TurnInput& in, const TurnState& state,
            const std::function<void(Extension&&)>& f);

/// Beam search.  With BeamOptions{0, infinity} the result equals the
/// exhaustive maximum: hypotheses are only discarded when their score is
/// already below a complete interpretation's.
DecodeResult decode(const JointModel& model, const TurnInput& in, const BeamOptions& opts = {});

/// Depth-first search over all interpretations; turns of at most 8 words.
DecodeResult exhaustive(const JointModel& model, const TurnInput& in);

/// Number of complete interpretations with nonzero probability (no
/// pruning; small turns only).
std::size_t count_interpretations(const JointModel& model, const TurnInput& in);

enum class PerplexityMode {
  Marginal,  // sum over surviving hypotheses of all tag extensions
  Joint,     // joint probability of the best interpretation
};

/// log2 Pr(w_i | w_1..w_{i-1}) for each word of a turn.  In Joint mode the
/// per-word values are the increments of the best path's log2 score.
std::vector<double> word_log2_probs(const JointModel& model, const TurnInput& in,
                                    const BeamOptions& opts, PerplexityMode mode);

PerplexityResult word_perplexity(const JointModel& model,
                                 const std::vector<const AnnotatedTurn*>& turns,
                                 const BeamOptions& opts,
                                 PerplexityMode mode = PerplexityMode::Marginal);

/// Marginal distribution of the word at position i over lexicon ids plus
/// UNK (last entry), given the surviving hypotheses after words 0..i-1 and
/// the observed silence before word i.  Sums to 1.
std::vector<double> next_word_distribution(const JointModel& model, const TurnInput& in, int i,
                                           const BeamOptions& opts);

}  // namespace dlm
