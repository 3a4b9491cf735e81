// src/ngram.cpp
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

#include "dialoglm/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "dialoglm/error.hpp"

namespace dlm {

std::vector<double> good_turing_discounts(const std::vector<double>& n, int k) {
  std::vector<double> d(static_cast<std::size_t>(k) + 1, 1.0);
  auto nr = [&](int r) { return r < static_cast<int>(n.size()) ? n[static_cast<std::size_t>(r)] : 0.0; };
  if (nr(1) <= 0.0) return d;
  const double a = (k + 1) * nr(k + 1) / nr(1);
  if (a >= 1.0) return d;
  for (int r = 1; r <= k; ++r) {
    if (nr(r) <= 0.0) continue;
    const double rstar = (r + 1) * nr(r + 1) / nr(r);
    const double dr = (rstar / r - a) / (1.0 - a);
    if (dr > 0.0 && dr < 1.0) d[static_cast<std::size_t>(r)] = dr;
  }
  return d;
}

int NgramModel::id(const std::string& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? kUnk : it->second;
}

namespace {

using Count2 = std::map<std::pair<int, int>, double>;
using Count3 = std::map<std::tuple<int, int, int>, double>;

template <class Map>
std::vector<double> count_of_counts(const Map& m, int k) {
  std::vector<double> n(static_cast<std::size_t>(k) + 2, 0.0);
  for (const auto& [key, c] : m) {
    const auto r = static_cast<long>(c);
    if (r >= 1 && r <= k + 1) n[static_cast<std::size_t>(r)] += 1.0;
  }
  return n;
}

double discounted(double r, const std::vector<double>& d) {
  const auto ri = static_cast<std::size_t>(r);
  return ri < d.size() ? d[ri] * r : r;
}

constexpr std::uint64_t kIdMask = (std::uint64_t{1} << 21) - 1;

// context key -> (n-gram key, count)
using Groups = std::map<std::uint64_t, std::vector<std::pair<std::uint64_t, double>>>;

// Discounted explicit probabilities of one order plus the backoff weights
// that make every context sum to one.
void katz_order(const Groups& groups, const std::vector<double>& d,
                const std::function<double(std::uint64_t)>& lower,
                std::unordered_map<std::uint64_t, double>& probs,
                std::unordered_map<std::uint64_t, double>& bows) {
  for (const auto& [ctx, entries] : groups) {
    double total = 0.0, seen_lower = 0.0;
    for (const auto& [key, c] : entries) {
      total += c;
      seen_lower += lower(key);
    }
    std::vector<double> p;
    double seen = 0.0;
    for (const auto& [key, c] : entries) {
      p.push_back(discounted(c, d) / total);
      seen += p.back();
    }
    double left = 1.0 - seen;
    const double unseen_lower = 1.0 - seen_lower;
    if (unseen_lower <= 1e-12) {
      // every symbol seen in this context: nothing to back off to
      for (double& x : p) x /= seen;
      left = 0.0;
    } else if (left <= 1e-12) {
      // all counts above the cutoff: keep 1/(c+1) for unseen symbols
      for (double& x : p) x *= total / (total + 1.0);
      left = 1.0 / (total + 1.0);
    }
    for (std::size_t i = 0; i < entries.size(); ++i) probs[entries[i].first] = p[i];
    bows[ctx] = unseen_lower <= 1e-12 ? 0.0 : left / unseen_lower;
  }
}

}  // namespace

NgramModel NgramModel::train(const std::vector<const AnnotatedTurn*>& turns,
                             const NgramConfig& config) {
  if (config.gt_cutoff < 0) throw UsageError("Good-Turing cutoff must be nonnegative");
  NgramModel m;
  m.config_ = config;
  std::map<std::string, int> freq;
  std::size_t words = 0;
  for (const auto* t : turns)
    for (const auto& tok : t->tokens) {
      ++freq[tok.surface];
      ++words;
    }
  if (words == 0) throw DataError("trigram training data has no words");
  m.vocab_ = {"<s>", "</s>", "<unk>"};
  for (const auto& [w, c] : freq)
    if (c >= config.vocab_min_count) m.vocab_.push_back(w);
  for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.index_[m.vocab_[i]] = static_cast<int>(i);
  const int V = m.vocab_size();

  std::vector<double> c1(static_cast<std::size_t>(V), 0.0);
  Count2 c2;
  Count3 c3;
  for (const auto* t : turns) {
    if (t->tokens.empty()) continue;
    std::vector<int> s = {kBos, kBos};
    for (const auto& tok : t->tokens) s.push_back(m.id(tok.surface));
    s.push_back(kEos);
    for (std::size_t i = 2; i < s.size(); ++i) {
      c1[static_cast<std::size_t>(s[i])] += 1.0;
      c2[{s[i - 1], s[i]}] += 1.0;
      c3[{s[i - 2], s[i - 1], s[i]}] += 1.0;
    }
  }

  // unigrams: maximum likelihood; <unk> keeps some mass even without
  // singletons so unseen test words stay possible
  if (c1[kUnk] <= 0.0) c1[kUnk] = 0.5;
  double n1 = 0.0;
  for (double c : c1) n1 += c;
  m.uni_.assign(static_cast<std::size_t>(V), 0.0);
  for (int w = 1; w < V; ++w) m.uni_[static_cast<std::size_t>(w)] = c1[static_cast<std::size_t>(w)] / n1;

  const int k = config.gt_cutoff;
  // bigrams
  {
    Groups groups;
    for (const auto& [vw, c] : c2)
      groups[static_cast<std::uint64_t>(vw.first)].emplace_back(key(vw.first, vw.second), c);
    katz_order(groups, good_turing_discounts(count_of_counts(c2, k), k),
               [&](std::uint64_t k2) { return m.uni_[static_cast<std::size_t>(k2 & kIdMask)]; },
               m.bi_, m.bow1_);
  }
  // trigrams
  {
    Groups groups;
    for (const auto& [uvw, c] : c3) {
      const auto [u, v, w] = uvw;
      groups[key(u, v)].emplace_back(key(u, v, w), c);
    }
    katz_order(groups, good_turing_discounts(count_of_counts(c3, k), k),
               [&](std::uint64_t k3) {
                 return m.bigram_prob(static_cast<int>((k3 >> 21) & kIdMask),
                                      static_cast<int>(k3 & kIdMask));
               },
               m.tri_, m.bow2_);
  }
  return m;
}

NgramModel NgramModel::train(const Corpus& corpus, const NgramConfig& config) {
  std::vector<const AnnotatedTurn*> turns;
  for (const auto& d : corpus.dialogs)
    for (const auto& t : d.turns) turns.push_back(&t);
  return train(turns, config);
}

NgramModel NgramModel::uniform(const std::vector<std::string>& words) {
  if (words.empty()) throw DataError("uniform model needs at least one word");
  NgramModel m;
  m.uniform_ = true;
  m.vocab_ = {"<s>", "</s>", "<unk>"};
  std::set<std::string> uniq(words.begin(), words.end());
  for (const auto& w : uniq) m.vocab_.push_back(w);
  for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.index_[m.vocab_[i]] = static_cast<int>(i);
  m.uni_.assign(m.vocab_.size(), 0.0);
  for (std::size_t i = 3; i < m.vocab_.size(); ++i) m.uni_[i] = 1.0 / static_cast<double>(uniq.size());
  return m;
}

double NgramModel::unigram_prob(int w) const { return uni_.at(static_cast<std::size_t>(w)); }

double NgramModel::bigram_prob(int v, int w) const {
  if (uniform_) return unigram_prob(w);
  auto it = bi_.find(key(v, w));
  if (it != bi_.end()) return it->second;
  auto b = bow1_.find(static_cast<std::uint64_t>(v));
  return (b == bow1_.end() ? 1.0 : b->second) * unigram_prob(w);
}

double NgramModel::prob(int u, int v, int w) const {
  if (uniform_) return unigram_prob(w);
  auto it = tri_.find(key(u, v, w));
  if (it != tri_.end()) return it->second;
  auto b = bow2_.find(key(u, v));
  return (b == bow2_.end() ? 1.0 : b->second) * bigram_prob(v, w);
}

double NgramModel::context_mass(int u, int v) const {
  double s = 0.0;
  for (int w = 1; w < vocab_size(); ++w) s += prob(u, v, w);
  return s;
}

double NgramModel::bigram_context_mass(int v) const {
  double s = 0.0;
  for (int w = 1; w < vocab_size(); ++w) s += bigram_prob(v, w);
  return s;
}

std::vector<double> NgramModel::word_log2_probs(const AnnotatedTurn& turn) const {
  std::vector<double> out;
  int u = kBos, v = kBos;
  for (const auto& tok : turn.tokens) {
    const int w = id(tok.surface);
    const double p = prob(u, v, w);
    if (!(p > 0.0)) throw DataError("word '" + tok.surface + "' has zero probability");
    out.push_back(std::log2(p));
    u = v;
    v = w;
  }
  return out;
}

NgramModel NgramModel::without_trigrams() const {
  NgramModel m = *this;
  m.tri_.clear();
  m.bow2_.clear();
  return m;
}

PerplexityResult trigram_perplexity(const NgramModel& model,
                                    const std::vector<const AnnotatedTurn*>& turns) {
  PerplexityResult r;
  for (const auto* t : turns) {
    for (double x : model.word_log2_probs(*t)) r.log2_sum += x;
    r.words += t->tokens.size();
  }
  if (r.words == 0) throw DataError("perplexity of an empty test set");
  return r;
}

}  // namespace dlm
