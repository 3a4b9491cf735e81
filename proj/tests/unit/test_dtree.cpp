// tests/unit/test_dtree.cpp
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
#include <numeric>

#include "dialoglm/dtree.hpp"
#include "dialoglm/error.hpp"
#include "test_util.hpp"

namespace dlm {
namespace {

ContextSchema feature_schema(int features, int cardinality = 2) {
  ContextSchema s;
  for (int f = 0; f < features; ++f) {
    s.feature_names.push_back("f" + std::to_string(f));
    s.feature_cardinality.push_back(cardinality);
  }
  return s;
}

Event ev(std::initializer_list<int> features, int outcome, double weight = 1.0) {
  Event e;
  int i = 0;
  for (int f : features) e.context.feature[static_cast<std::size_t>(i++)] = static_cast<std::int8_t>(f);
  e.outcome = outcome;
  e.weight = weight;
  return e;
}

// -sum_k c_k log(c_k / W), written from the definition
double oracle_impurity(const std::vector<double>& c) {
  const double w = std::accumulate(c.begin(), c.end(), 0.0);
  double h = 0.0;
  for (double x : c)
    if (x > 0.0) h -= x * std::log(x / w);
  return h;
}

std::vector<double> counts_of(const std::vector<Event>& es, int k) {
  std::vector<double> c(static_cast<std::size_t>(k), 0.0);
  for (const auto& e : es) c[static_cast<std::size_t>(e.outcome)] += e.weight;
  return c;
}

std::vector<Event> random_events(test::Gen& g, int n, int features, int outcomes) {
  std::vector<Event> out;
  for (int i = 0; i < n; ++i) {
    Event e;
    for (int f = 0; f < features; ++f) e.context.feature[static_cast<std::size_t>(f)] = static_cast<std::int8_t>(test::uniform_int(g, 0, 1));
    // outcome leans on the first two features
    const int base = e.context.feature[0] + 2 * e.context.feature[1];
    e.outcome = test::uniform_real(g) < 0.7 ? base % outcomes : test::uniform_int(g, 0, outcomes - 1);
    out.push_back(e);
  }
  return out;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(DTree, WeightedEntropyMatchesDefinition) {
  test::Gen g(1);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> c(static_cast<std::size_t>(test::uniform_int(g, 1, 6)));
    for (auto& x : c) x = test::uniform_int(g, 0, 3) == 0 ? 0.0 : 10.0 * test::uniform_real(g);
    EXPECT_NEAR(weighted_entropy(c), oracle_impurity(c), 1e-9);
  }
  EXPECT_EQ(weighted_entropy({0.0, 0.0}), 0.0);
  EXPECT_NEAR(weighted_entropy({2.0, 2.0}), 4.0 * std::log(2.0), 1e-12);
}

TEST(DTree, PerfectlySeparatingBitGivesOneSplit) {
  std::vector<Event> es;
  for (int i = 0; i < 10; ++i) {
    es.push_back(ev({0, i % 2}, 0));
    es.push_back(ev({1, i % 2}, 1));
  }
  const auto t = ProbTree::grow(es, feature_schema(2), 2, TreeParams{2, 24});
  ASSERT_EQ(t.num_leaves(), 2);
  const auto& root = t.nodes()[0];
  EXPECT_EQ(root.question.kind, Question::Feature);
  EXPECT_EQ(root.question.index, 0);
  for (int c : root.child) {
    const auto& leaf = t.nodes()[static_cast<std::size_t>(c)];
    EXPECT_EQ(std::count_if(leaf.counts.begin(), leaf.counts.end(), [](double x) { return x > 0; }), 1);
  }
}

TEST(DTree, PureLeafWithFullLambdaReturnsPointMass) {
  std::vector<Event> es;
  for (int i = 0; i < 10; ++i) {
    es.push_back(ev({0}, 0));
    es.push_back(ev({1}, 1));
  }
  auto t = ProbTree::grow(es, feature_schema(1), 2, TreeParams{2, 24});
  t.set_all_lambdas(1.0);
  EXPECT_DOUBLE_EQ(t.query(ev({0}, 0).context)[0], 1.0);
  EXPECT_DOUBLE_EQ(t.query(ev({1}, 0).context)[1], 1.0);
  // smoothed on matching heldout: close to, but below, a point mass
  t.smooth({ev({0}, 0), ev({0}, 0), ev({1}, 1)});
  EXPECT_GT(t.query(ev({0}, 0).context)[0], 0.9);
  EXPECT_GT(t.query(ev({0}, 0).context)[1], 0.0);
}

// Every single-bit split of XOR data leaves both halves balanced, so the
// greedy grower has no positive decrease to take and stops at the root.
TEST(DTree, XorHasNoGreedySplit) {
  std::vector<Event> es;
  for (int rep = 0; rep < 5; ++rep)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) es.push_back(ev({a, b}, a ^ b));
  const auto t = ProbTree::grow(es, feature_schema(2), 2, TreeParams{1, 24});
  EXPECT_EQ(t.num_leaves(), 1);
}

TEST(DTree, IndependentOutcomesGiveRootOnlyTree) {
  std::vector<Event> es;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b)
      for (int y = 0; y < 3; ++y) es.push_back(ev({a, b}, y));
  const auto t = ProbTree::grow(es, feature_schema(2, 3), 3, TreeParams{1, 24});
  EXPECT_EQ(t.num_leaves(), 1);
}

TEST(DTree, GrowRejectsBadInput) {
  EXPECT_THROW(ProbTree::grow({}, feature_schema(1), 2, {}), DataError);
  EXPECT_THROW(ProbTree::grow({ev({0}, 2)}, feature_schema(1), 2, {}), DataError);
}

TEST(DTree, ChosenSplitsMaximizeImpurityDecrease) {
  test::Gen g(9);
  const auto schema = feature_schema(4);
  const auto qs = schema.questions();
  for (int rep = 0; rep < 40; ++rep) {
    const auto es = random_events(g, test::uniform_int(g, 10, 80), 4, 3);
    const int min_leaf = test::uniform_int(g, 1, 6);
    const auto t = ProbTree::grow(es, schema, 3, TreeParams{min_leaf, 24});
    // route events to every node
    std::vector<std::vector<Event>> at(t.nodes().size());
    for (const auto& e : es) {
      int id = 0;
      for (;;) {
        at[static_cast<std::size_t>(id)].push_back(e);
        const auto& nd = t.nodes()[static_cast<std::size_t>(id)];
        if (nd.is_leaf()) break;
        id = nd.child[nd.question.answer(e.context) ? 1 : 0];
      }
    }
    for (std::size_t id = 0; id < t.nodes().size(); ++id) {
      const auto& nd = t.nodes()[id];
      const auto& here = at[id];
      EXPECT_NEAR(nd.weight, static_cast<double>(here.size()), 1e-12);
      double best = 0.0;
      for (const auto& q : qs) {
        std::vector<Event> yes, no;
        for (const auto& e : here) (q.answer(e.context) ? yes : no).push_back(e);
        if (yes.empty() || no.empty()) continue;
        best = std::max(best, oracle_impurity(counts_of(here, 3)) - oracle_impurity(counts_of(yes, 3)) -
                                  oracle_impurity(counts_of(no, 3)));
      }
      if (nd.is_leaf()) {
        // a leaf either had nothing to gain or was too small to split
        EXPECT_TRUE(best <= 1e-10 * nd.weight || nd.weight < min_leaf) << best;
        continue;
      }
      EXPECT_NEAR(nd.decrease, best, 1e-9);
    }
  }
}

TEST(DTree, LeavesStopOnlyWhenNoGainOrTooSmall) {
  test::Gen g(21);
  const auto schema = feature_schema(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto es = random_events(g, 60, 3, 3);
    const int min_leaf = test::uniform_int(g, 1, 10);
    const auto t = ProbTree::grow(es, schema, 3, TreeParams{min_leaf, 24});
    for (const auto& nd : t.nodes()) {
      if (!nd.is_leaf()) {
        EXPECT_GE(nd.weight, min_leaf);
        EXPECT_GT(nd.decrease, 0.0);
      }
    }
  }
}

TEST(DTree, DuplicatedDataGrowsTheSameStructure) {
  test::Gen g(4);
  const auto schema = feature_schema(4);
  for (int rep = 0; rep < 30; ++rep) {
    const auto es = random_events(g, test::uniform_int(g, 20, 100), 4, 3);
    auto twice = es;
    twice.insert(twice.end(), es.begin(), es.end());
    const int min_leaf = test::uniform_int(g, 1, 8);
    const auto a = ProbTree::grow(es, schema, 3, TreeParams{min_leaf, 24});
    const auto b = ProbTree::grow(twice, schema, 3, TreeParams{2 * min_leaf, 24});
    ASSERT_EQ(a.nodes().size(), b.nodes().size());
    for (std::size_t i = 0; i < a.nodes().size(); ++i) {
      EXPECT_EQ(a.nodes()[i].question, b.nodes()[i].question);
      EXPECT_EQ(a.nodes()[i].child[0], b.nodes()[i].child[0]);
      EXPECT_EQ(a.nodes()[i].child[1], b.nodes()[i].child[1]);
    }
  }
}

TEST(DTree, EmptyHeldoutGivesUniformAnchoredChain) {
  test::Gen g(2);
  const auto es = random_events(g, 80, 3, 3);
  auto t = ProbTree::grow(es, feature_schema(3), 3, TreeParams{4, 24});
  ASSERT_GT(t.num_leaves(), 1);
  t.smooth({});
  for (const auto& nd : t.nodes()) {
    EXPECT_EQ(nd.lambda, 0.0);
    for (double p : nd.dist) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  }
}

TEST(DTree, SmoothingInterpolatesWithTheParent) {
  test::Gen g(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto es = random_events(g, 120, 3, 3);
    auto t = ProbTree::grow(es, feature_schema(3), 3, TreeParams{4, 24});
    // heldout only ever has feature 0 set to 0
    auto held = random_events(g, 40, 3, 3);
    for (auto& e : held) e.context.feature[0] = 0;
    t.smooth(held);
    std::vector<int> parent(t.nodes().size(), -1);
    for (std::size_t id = 0; id < t.nodes().size(); ++id)
      if (!t.nodes()[id].is_leaf())
        for (int c : t.nodes()[id].child) parent[static_cast<std::size_t>(c)] = static_cast<int>(id);
    std::vector<double> reached(t.nodes().size(), 0.0);
    for (const auto& e : held) {
      int id = 0;
      for (;;) {
        reached[static_cast<std::size_t>(id)] += 1.0;
        const auto& nd = t.nodes()[static_cast<std::size_t>(id)];
        if (nd.is_leaf()) break;
        id = nd.child[nd.question.answer(e.context) ? 1 : 0];
      }
    }
    for (std::size_t id = 0; id < t.nodes().size(); ++id) {
      const auto& nd = t.nodes()[id];
      EXPECT_GE(nd.lambda, 0.0);
      EXPECT_LT(nd.lambda, 1.0);
      EXPECT_NEAR(sum(nd.dist), 1.0, 1e-9);
      const std::vector<double> par = parent[id] < 0 ? std::vector<double>(3, 1.0 / 3.0)
                                                     : t.nodes()[static_cast<std::size_t>(parent[id])].dist;
      for (std::size_t k = 0; k < 3; ++k) {
        const double mle = nd.weight > 0 ? nd.counts[k] / nd.weight : 0.0;
        EXPECT_NEAR(nd.dist[k], nd.lambda * mle + (1 - nd.lambda) * par[k], 1e-12);
      }
      if (reached[id] == 0.0) {
        EXPECT_EQ(nd.lambda, 0.0);
        EXPECT_EQ(nd.dist, par);
      }
      if (nd.is_leaf())
        for (double p : nd.dist) EXPECT_GT(p, 0.0);
    }
  }
}

TEST(DTree, SmoothingNeverLosesHeldoutLikelihood) {
  test::Gen g(13);
  for (int rep = 0; rep < 30; ++rep) {
    const auto es = random_events(g, 150, 4, 4);
    const auto held = random_events(g, 60, 4, 4);
    auto t = ProbTree::grow(es, feature_schema(4), 4, TreeParams{3, 24});
    t.set_all_lambdas(0.0);
    const double flat = t.heldout_log_likelihood(held);
    t.smooth(held);
    EXPECT_GE(t.heldout_log_likelihood(held), flat - 1e-9);
  }
}

TEST(DTree, SmoothedBeatsFlooredMleOnMatchingHeldout) {
  test::Gen g(6);
  const auto es = random_events(g, 4000, 4, 4);
  const auto held = random_events(g, 2000, 4, 4);
  auto t = ProbTree::grow(es, feature_schema(4), 4, TreeParams{8, 24});
  t.smooth(held);
  const double smoothed = t.heldout_log_likelihood(held);
  double floored = 0.0;
  for (const auto& e : held) {
    const auto& nd = t.nodes()[static_cast<std::size_t>(t.leaf(e.context))];
    floored += std::log(std::max(1e-6, nd.counts[static_cast<std::size_t>(e.outcome)] / nd.weight));
  }
  EXPECT_GE(smoothed, floored);
}

TEST(DTree, UnseenOutcomeKeepsMass) {
  std::vector<Event> es(30, ev({0}, 0));
  auto t = ProbTree::grow(es, feature_schema(1), 3, {});
  t.smooth({ev({0}, 0), ev({0}, 1), ev({0}, 0), ev({0}, 2)});
  for (double p : t.query(ev({0}, 0).context)) EXPECT_GT(p, 0.0);
}

TEST(DTree, FitLambdaMatchesGridSearch) {
  test::Gen g(33);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = test::uniform_int(g, 2, 6);
    std::vector<double> h(static_cast<std::size_t>(k)), mle(h.size()), par(h.size());
    for (auto& x : h) x = test::uniform_int(g, 0, 5);
    for (auto& x : mle) x = test::uniform_int(g, 0, 2) == 0 ? 0.0 : test::uniform_real(g);
    for (auto& x : par) x = 0.05 + test::uniform_real(g);
    if (sum(mle) == 0.0) mle[0] = 1.0;
    const double sm = sum(mle), sp = sum(par);
    for (auto& x : mle) x /= sm;
    for (auto& x : par) x /= sp;
    auto f = [&](double l) {
      double s = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] > 0) s += h[i] * std::log(l * mle[i] + (1 - l) * par[i]);
      return s;
    };
    const double cap = 0.5 + 0.5 * test::uniform_real(g);
    double grid = f(0.0);
    for (int i = 1; i <= 10000; ++i) grid = std::max(grid, f(cap * i / 10000.0));
    const double l = fit_lambda(h, mle, par, cap);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, cap);
    EXPECT_NEAR(f(l), grid, 1e-5 * (1.0 + std::abs(grid)));
  }
}

TEST(DTree, QueriesSumToOne) {
  test::Gen g(77);
  ContextSchema s = feature_schema(2, 3);
  s.slot_names = {"w1", "w2"};
  s.code_bits = 4;
  auto random_context = [&] {
    Context c;
    for (auto& sl : c.slot) {
      sl.present = test::uniform_int(g, 0, 3) != 0;
      sl.pos_len = static_cast<std::uint8_t>(test::uniform_int(g, 0, 4));
      sl.word_len = static_cast<std::uint8_t>(test::uniform_int(g, 0, 4));
      sl.pos_bits = static_cast<std::uint16_t>(test::uniform_int(g, 0, 15));
      sl.word_bits = static_cast<std::uint16_t>(test::uniform_int(g, 0, 15));
    }
    for (int f = 0; f < 2; ++f) c.feature[static_cast<std::size_t>(f)] = static_cast<std::int8_t>(test::uniform_int(g, 0, 2));
    return c;
  };
  std::vector<Event> es, held;
  for (int i = 0; i < 600; ++i) {
    Event e{random_context(), 0, 1.0};
    e.outcome = (e.context.slot[0].pos_bits & 3) % 5;
    if (test::uniform_int(g, 0, 4) == 0) e.outcome = test::uniform_int(g, 0, 4);
    (i % 3 == 0 ? held : es).push_back(e);
  }
  auto t = ProbTree::grow(es, s, 5, TreeParams{4, 24});
  t.smooth(held);
  EXPECT_GT(t.num_leaves(), 1);
  for (int i = 0; i < 10000; ++i) {
    const auto& d = t.query(random_context());
    EXPECT_NEAR(sum(d), 1.0, 1e-9);
  }
}

TEST(DTree, AbsentSlotAnswersNoToBothValues) {
  Context c;
  for (int v = 0; v < 2; ++v) {
    EXPECT_FALSE((Question{Question::PosBit, 0, 0, static_cast<std::int8_t>(v)}.answer(c)));
    EXPECT_FALSE((Question{Question::WordBit, 0, 0, static_cast<std::int8_t>(v)}.answer(c)));
  }
  c.slot[0].present = true;
  c.slot[0].pos_len = 1;
  c.slot[0].pos_bits = 1;
  EXPECT_TRUE((Question{Question::PosBit, 0, 0, 1}.answer(c)));
  EXPECT_FALSE((Question{Question::PosBit, 0, 1, 0}.answer(c)));  // past the code end
}

TEST(DTree, DumpListsQuestionsAndLambdas) {
  std::vector<Event> es;
  for (int i = 0; i < 10; ++i) {
    es.push_back(ev({0}, 0));
    es.push_back(ev({1}, 1));
  }
  auto t = ProbTree::grow(es, feature_schema(1), 2, TreeParams{2, 24});
  const auto text = t.dump({"a", "b"});
  EXPECT_NE(text.find("split f0==0"), std::string::npos);
  EXPECT_NE(text.find("lambda=0.0000"), std::string::npos);
  EXPECT_NE(text.find("a:"), std::string::npos);
}

}  // namespace
}  // namespace dlm
