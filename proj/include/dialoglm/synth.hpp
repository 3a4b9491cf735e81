// include/dialoglm/synth.hpp
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
#include <random>

#include "dialoglm/corpus.hpp"

namespace dlm {

/// Portable seeded randomness: mt19937_64 output mapped without the
/// implementation-defined standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  /// Uniform integer in [0, n).
  int below(int n);
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  int dialogs = 40;
  int min_turns = 12;
  int max_turns = 20;
  int max_phrases = 4;
  double mod_repair_rate = 0.14;     // per phrase
  double fresh_start_rate = 0.06;    // per phrase
  double abridged_rate = 0.06;       // per phrase
  double total_take_rate = 0.45;     // "will total / will take" in duration phrases
  double missing_tone_rate = 0.08;   // phrase boundary without a tone
  double initial_pause_rate = 0.10;  // turn-initial filled pause
};

/// A Trains-like task-dialog corpus with boundary tones, discourse
/// markers, editing terms and all three repair kinds.  Silences are
/// correlated with tones and repair sites.
Corpus synthesize_corpus(const SynthConfig& config);

/// One turn from the same grammar, at most `max_words` long (fewer
/// phrases, no repairs if they do not fit).
AnnotatedTurn synthesize_turn(Rng& rng, const SynthConfig& config, int max_words);

}  // namespace dlm
