// tests/unit/test_ngram.cpp
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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "dialoglm/error.hpp"
#include "dialoglm/ngram.hpp"
#include "test_util.hpp"

namespace dlm {
namespace {

// Katz backoff written out over string n-grams, independent of the model's
// integer keys and grouping.
class KatzOracle {
 public:
  KatzOracle(const std::vector<const AnnotatedTurn*>& turns, int cutoff, int min_count) : k_(cutoff) {
    std::map<std::string, int> freq;
    for (const auto* t : turns)
      for (const auto& tok : t->tokens) ++freq[tok.surface];
    for (const auto& [w, c] : freq)
      if (c >= min_count) known_.insert(w);
    for (const auto* t : turns) {
      std::vector<std::string> s = {"<s>", "<s>"};
      for (const auto& tok : t->tokens) s.push_back(known_.count(tok.surface) ? tok.surface : "<unk>");
      s.push_back("</s>");
      for (std::size_t i = 2; i < s.size(); ++i) {
        c1_[s[i]] += 1;
        c2_[{s[i - 1], s[i]}] += 1;
        c3_[{s[i - 2], s[i - 1], s[i]}] += 1;
        ctx2_[{s[i - 2], s[i - 1]}] += 1;
        ctx1_[s[i - 1]] += 1;
      }
    }
    if (c1_["<unk>"] <= 0) c1_["<unk>"] = 0.5;
    for (const auto& [w, c] : c1_) n1_ += c;
    vocab_ = {"</s>", "<unk>"};
    for (const auto& w : known_) vocab_.push_back(w);
    d2_ = discounts(c2_);
    d3_ = discounts(c3_);
  }

  const std::vector<std::string>& vocab() const { return vocab_; }

  double uni(const std::string& w) const {
    auto it = c1_.find(w);
    return it == c1_.end() ? 0.0 : it->second / n1_;
  }

  double bi(const std::string& v, const std::string& w) const {
    auto ctx = ctx1_.find(v);
    if (ctx == ctx1_.end()) return uni(w);
    return level(ctx->second, [&](const std::string& x) { return count(c2_, {v, x}); },
                 [&](const std::string& x) { return uni(x); }, d2_, w);
  }

  double tri(const std::string& u, const std::string& v, const std::string& w) const {
    auto ctx = ctx2_.find({u, v});
    if (ctx == ctx2_.end()) return bi(v, w);
    return level(ctx->second, [&](const std::string& x) { return count(c3_, {u, v, x}); },
                 [&](const std::string& x) { return bi(v, x); }, d3_, w);
  }

 private:
  template <class M>
  std::map<int, double> discounts(const M& m) const {
    std::map<int, double> n;
    for (const auto& [key, c] : m) n[static_cast<int>(c)] += 1;
    std::map<int, double> d;
    if (n[1] <= 0) return d;
    const double a = (k_ + 1) * n[k_ + 1] / n[1];
    if (a >= 1.0) return d;
    for (int r = 1; r <= k_; ++r) {
      if (n[r] <= 0) continue;
      const double dr = ((r + 1) * n[r + 1] / n[r] / r - a) / (1 - a);
      if (dr > 0 && dr < 1) d[r] = dr;
    }
    return d;
  }

  template <class M>
  static double count(const M& m, const typename M::key_type& key) {
    auto it = m.find(key);
    return it == m.end() ? 0.0 : it->second;
  }

  template <class C, class L>
  double level(double total, C cnt, L lower, const std::map<int, double>& d, const std::string& w) const {
    double seen = 0.0, seen_lower = 0.0;
    for (const auto& x : vocab_) {
      const double c = cnt(x);
      if (c <= 0) continue;
      auto it = d.find(static_cast<int>(c));
      seen += (it == d.end() ? 1.0 : it->second) * c / total;
      seen_lower += lower(x);
    }
    const double c = cnt(w);
    auto it = d.find(static_cast<int>(c));
    double p = (it == d.end() ? 1.0 : it->second) * c / total;
    double left = 1.0 - seen;
    if (1.0 - seen_lower <= 1e-12) return p / seen;
    if (left <= 1e-12) {
      p *= total / (total + 1);
      left = 1 / (total + 1);
    }
    return c > 0 ? p : left / (1.0 - seen_lower) * lower(w);
  }

  int k_;
  std::set<std::string> known_;
  std::map<std::string, double> c1_, ctx1_;
  std::map<std::pair<std::string, std::string>, double> c2_, ctx2_;
  std::map<std::tuple<std::string, std::string, std::string>, double> c3_;
  double n1_ = 0.0;
  std::vector<std::string> vocab_;
  std::map<int, double> d2_, d3_;
};

TEST(Ngram, GoodTuringDiscountsFollowKatz) {
  // n1..n6 = 10, 6, 4, 3, 2, 1; cutoff 5
  const std::vector<double> n = {0, 10, 6, 4, 3, 2, 1};
  const auto d = good_turing_discounts(n, 5);
  const double a = 6.0 * 1 / 10;
  for (int r = 1; r <= 5; ++r) {
    const double rstar = (r + 1) * n[static_cast<std::size_t>(r + 1)] / n[static_cast<std::size_t>(r)];
    const double want = (rstar / r - a) / (1 - a);
    if (want > 0 && want < 1)
      EXPECT_NEAR(d[static_cast<std::size_t>(r)], want, 1e-12) << r;
    else
      EXPECT_EQ(d[static_cast<std::size_t>(r)], 1.0) << r;
  }
  // no singletons: nothing to discount
  EXPECT_EQ(good_turing_discounts({0, 0, 3, 1}, 2), (std::vector<double>{1, 1, 1}));
}

TEST(Ngram, MatchesIndependentKatzOracle) {
  const auto turns = test::turns_of(test::small_corpus());
  const std::vector<const AnnotatedTurn*> some(turns.begin(), turns.begin() + 60);
  for (int cutoff : {0, 1, 5}) {
    const NgramConfig cfg{cutoff, 2};
    const NgramModel m = NgramModel::train(some, cfg);
    const KatzOracle o(some, cutoff, 2);
    const auto& V = o.vocab();
    test::Gen g(static_cast<std::uint64_t>(cutoff));
    std::vector<std::string> ctx = V;
    ctx.push_back("<s>");
    for (int rep = 0; rep < 3000; ++rep) {
      const auto& u = ctx[static_cast<std::size_t>(test::uniform_int(g, 0, static_cast<int>(ctx.size()) - 1))];
      const auto& v = ctx[static_cast<std::size_t>(test::uniform_int(g, 0, static_cast<int>(ctx.size()) - 1))];
      const auto& w = V[static_cast<std::size_t>(test::uniform_int(g, 0, static_cast<int>(V.size()) - 1))];
      EXPECT_NEAR(m.prob(m.id(u), m.id(v), m.id(w)), o.tri(u, v, w), 1e-12) << u << ' ' << v << ' ' << w;
    }
    // every observed trigram too
    for (const auto* t : some) {
      std::string u = "<s>", v = "<s>";
      for (const auto& tok : t->tokens) {
        const std::string w = m.id(tok.surface) == NgramModel::kUnk ? "<unk>" : tok.surface;
        EXPECT_NEAR(m.prob(m.id(u), m.id(v), m.id(w)), o.tri(u, v, w), 1e-12);
        u = v;
        v = w;
      }
    }
  }
}

TEST(Ngram, EveryContextSumsToOne) {
  const NgramModel m = NgramModel::train(test::small_corpus());
  test::Gen g(2);
  const int V = m.vocab_size();
  for (int rep = 0; rep < 300; ++rep) {
    const int u = test::uniform_int(g, 0, V - 1), v = test::uniform_int(g, 0, V - 1);
    if (u == NgramModel::kEos || v == NgramModel::kEos) continue;
    EXPECT_NEAR(m.context_mass(u, v), 1.0, 1e-9);
    EXPECT_NEAR(m.bigram_context_mass(v), 1.0, 1e-9);
  }
  EXPECT_NEAR(m.context_mass(NgramModel::kBos, NgramModel::kBos), 1.0, 1e-9);
}

TEST(Ngram, UnseenContextBacksOffToTheBigram) {
  const NgramModel m = NgramModel::train(test::small_corpus());
  const int a = m.id("boxcar"), b = m.id("hours");
  ASSERT_NE(a, NgramModel::kUnk);
  for (int w = 1; w < m.vocab_size(); ++w) EXPECT_DOUBLE_EQ(m.prob(a, b, w), m.bigram_prob(b, w));
  const NgramModel bi = m.without_trigrams();
  for (int w = 1; w < m.vocab_size(); ++w)
    EXPECT_DOUBLE_EQ(bi.prob(NgramModel::kBos, NgramModel::kBos, w), m.bigram_prob(NgramModel::kBos, w));
}

TEST(Ngram, UnknownWordsHaveProbability) {
  const NgramModel m = NgramModel::train(test::small_corpus());
  AnnotatedTurn t;
  t.tokens = {Token{"okay", "UH_D"}, Token{"zzyzx", "NN"}};
  for (double x : m.word_log2_probs(t)) EXPECT_TRUE(std::isfinite(x));
  EXPECT_EQ(m.id("zzyzx"), NgramModel::kUnk);
}

TEST(Ngram, UniformModelPerplexityIsVocabularySize) {
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const NgramModel m = NgramModel::uniform(words);
  std::vector<AnnotatedTurn> ts(3);
  ts[0].tokens = {Token{"a", "X"}, Token{"b", "X"}};
  ts[1].tokens = {Token{"h", "X"}};
  ts[2].tokens = {Token{"c", "X"}, Token{"c", "X"}, Token{"g", "X"}};
  std::vector<const AnnotatedTurn*> ptr;
  for (const auto& t : ts) ptr.push_back(&t);
  EXPECT_NEAR(trigram_perplexity(m, ptr).perplexity(), 8.0, 1e-6);
  EXPECT_THROW(NgramModel::uniform({}), DataError);
  EXPECT_THROW(trigram_perplexity(m, {}), DataError);
}

TEST(Ngram, TrainingNeedsWords) {
  EXPECT_THROW(NgramModel::train(std::vector<const AnnotatedTurn*>{}), DataError);
  EXPECT_THROW(NgramModel::train(test::small_corpus(), NgramConfig{-1, 2}), UsageError);
}

}  // namespace
}  // namespace dlm
