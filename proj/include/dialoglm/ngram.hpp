// include/dialoglm/ngram.hpp
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
#include <unordered_map>
#include <vector>

#include "dialoglm/corpus.hpp"
#include "dialoglm/perplexity.hpp"

namespace dlm {

struct NgramConfig {
  int gt_cutoff = 5;       // counts 1..cutoff are Good-Turing discounted
  int vocab_min_count = 2;  // rarer training words become <unk>

  bool operator==(const NgramConfig&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(gt_cutoff, vocab_min_count);
  }
};

/// Word trigram model with Katz backoff.  Turns are sentences, padded with
/// two <s> and one </s>.
class NgramModel {
 public:
  static constexpr int kBos = 0, kEos = 1, kUnk = 2;

  NgramModel() = default;
  static NgramModel train(const std::vector<const AnnotatedTurn*>& turns,
                          const NgramConfig& config = {});
  static NgramModel train(const Corpus& corpus, const NgramConfig& config = {});
  /// Each of `words` has probability 1/|words| in every context; </s> and
  /// <unk> get none.
  static NgramModel uniform(const std::vector<std::string>& words);

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  int id(const std::string& w) const;  // kUnk if unknown

  double prob(int u, int v, int w) const;  // P(w | u v)
  double bigram_prob(int v, int w) const;
  double unigram_prob(int w) const;
  /// Explicit (discounted) mass plus backoff mass of a context; 1 for every
  /// context in a trained model.
  double context_mass(int u, int v) const;
  double bigram_context_mass(int v) const;

  /// log2 P of each word of a turn; </s> is not included.
  std::vector<double> word_log2_probs(const AnnotatedTurn& turn) const;

  /// Same model without its trigram statistics.
  NgramModel without_trigrams() const;

  const NgramConfig& config() const { return config_; }
  bool operator==(const NgramModel& o) const {
    return config_ == o.config_ && vocab_ == o.vocab_ && uniform_ == o.uniform_ &&
           uni_ == o.uni_ && bi_ == o.bi_ && tri_ == o.tri_ && bow1_ == o.bow1_ && bow2_ == o.bow2_;
  }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(config_, vocab_, uniform_, uni_, bi_, tri_, bow1_, bow2_);
    index_.clear();
    for (std::size_t i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = static_cast<int>(i);
  }

 private:
  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(a) << 21) | static_cast<std::uint64_t>(b);
  }
  static std::uint64_t key(int a, int b, int c) {
    return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) |
           static_cast<std::uint64_t>(c);
  }

  NgramConfig config_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  bool uniform_ = false;
  std::vector<double> uni_;                       // unigram probabilities
  std::unordered_map<std::uint64_t, double> bi_;  // explicit P(w | v)
  std::unordered_map<std::uint64_t, double> tri_;  // explicit P(w | u v)
  std::unordered_map<std::uint64_t, double> bow1_;  // backoff weight of context v
  std::unordered_map<std::uint64_t, double> bow2_;  // backoff weight of context u v
};

/// Katz discount ratios d_r for r = 0..cutoff (index 0 unused) from counts
/// of counts n[r]; d_r = 1 where the estimate is degenerate.
std::vector<double> good_turing_discounts(const std::vector<double>& count_of_counts, int cutoff);

PerplexityResult trigram_perplexity(const NgramModel& model,
                                    const std::vector<const AnnotatedTurn*>& turns);

}  // namespace dlm
