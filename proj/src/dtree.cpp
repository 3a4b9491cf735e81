// src/dtree.cpp
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

#include "dialoglm/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

bool Question::answer(const Context& c) const {
  switch (kind) {
    case PosBit: {
      const auto& s = c.slot[index];
      return s.present && bit < s.pos_len && ((s.pos_bits >> bit) & 1) == value;
    }
    case WordBit: {
      const auto& s = c.slot[index];
      return s.present && bit < s.word_len && ((s.word_bits >> bit) & 1) == value;
    }
    case Feature: return c.feature[index] == value;
  }
  return false;
}

std::vector<Question> ContextSchema::questions() const {
  std::vector<Question> out;
  for (std::size_t s = 0; s < slot_names.size(); ++s)
    for (int b = 0; b < code_bits; ++b)
      for (int v = 0; v < 2; ++v) {
        out.push_back({Question::PosBit, static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(b),
                       static_cast<std::int8_t>(v)});
        out.push_back({Question::WordBit, static_cast<std::uint8_t>(s),
                       static_cast<std::uint8_t>(b), static_cast<std::int8_t>(v)});
      }
  for (std::size_t f = 0; f < feature_names.size(); ++f)
    for (int v = 0; v < feature_cardinality[f]; ++v)
      out.push_back({Question::Feature, static_cast<std::uint8_t>(f), 0, static_cast<std::int8_t>(v)});
  return out;
}

std::string ContextSchema::describe(const Question& q) const {
  std::ostringstream out;
  switch (q.kind) {
    case Question::PosBit:
      out << slot_names.at(q.index) << ".pos[" << int(q.bit) << "]==" << int(q.value);
      break;
    case Question::WordBit:
      out << slot_names.at(q.index) << ".word[" << int(q.bit) << "]==" << int(q.value);
      break;
    case Question::Feature:
      out << feature_names.at(q.index) << "==" << int(q.value);
      break;
  }
  return out.str();
}

double weighted_entropy(const std::vector<double>& counts) {
  double w = 0.0, s = 0.0;
  for (double c : counts)
    if (c > 0.0) {
      w += c;
      s += c * std::log(c);
    }
  return w > 0.0 ? w * std::log(w) - s : 0.0;
}

// ---------------------------------------------------------------------------

ProbTree ProbTree::grow(const std::vector<Event>& events, const ContextSchema& schema,
                        int num_outcomes, const TreeParams& params) {
  if (events.empty()) throw DataError("cannot grow a decision tree from no events");
  if (num_outcomes < 1) throw DataError("decision tree needs at least one outcome");
  for (const auto& e : events)
    if (e.outcome < 0 || e.outcome >= num_outcomes) throw DataError("event outcome out of range");

  ProbTree t;
  t.num_outcomes_ = num_outcomes;
  t.schema_ = schema;
  const std::size_t n = events.size();
  const std::size_t words = (n + 63) / 64;
  const auto K = static_cast<std::size_t>(num_outcomes);

  // Keep only questions whose answer varies over the training events.
  std::vector<Question> qs;
  std::vector<std::vector<std::uint64_t>> answers;
  for (const auto& q : schema.questions()) {
    std::vector<std::uint64_t> bits(words, 0);
    std::size_t yes = 0;
    for (std::size_t e = 0; e < n; ++e)
      if (q.answer(events[e].context)) {
        bits[e >> 6] |= std::uint64_t{1} << (e & 63);
        ++yes;
      }
    if (yes == 0 || yes == n) continue;
    // a question splitting the events like an earlier one (or its
    // complement) adds nothing
    bool dup = false;
    for (const auto& other : answers) {
      bool same = true, comp = true;
      for (std::size_t w = 0; w < words && (same || comp); ++w) {
        const std::uint64_t live = w + 1 < words || n % 64 == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << (n % 64)) - 1;
        same = same && other[w] == bits[w];
        comp = comp && ((other[w] ^ bits[w]) & live) == live;
      }
      if (same || comp) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    qs.push_back(q);
    answers.push_back(std::move(bits));
  }

  struct Pending {
    int node;
    std::vector<std::uint32_t> idx;
  };
  auto make_node = [&](const std::vector<std::uint32_t>& idx, int depth) {
    Node nd;
    nd.depth = depth;
    nd.counts.assign(K, 0.0);
    for (auto e : idx) nd.counts[static_cast<std::size_t>(events[e].outcome)] += events[e].weight;
    for (double c : nd.counts) nd.weight += c;
    t.nodes_.push_back(std::move(nd));
    return static_cast<int>(t.nodes_.size()) - 1;
  };

  std::vector<std::uint32_t> all(n);
  for (std::size_t e = 0; e < n; ++e) all[e] = static_cast<std::uint32_t>(e);
  std::vector<Pending> stack;
  stack.push_back({make_node(all, 0), std::move(all)});
  std::vector<double> yes(K);
  std::vector<double> no(K);

  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    const Node& nd = t.nodes_[static_cast<std::size_t>(p.node)];
    if (nd.weight < params.min_leaf || nd.depth >= params.max_depth) continue;
    const double parent_h = weighted_entropy(nd.counts);
    if (parent_h <= 0.0) continue;
    int best_q = -1;
    double best = 0.0;
    for (std::size_t q = 0; q < qs.size(); ++q) {
      std::fill(yes.begin(), yes.end(), 0.0);
      double wy = 0.0;
      const auto& bits = answers[q];
      for (auto e : p.idx)
        if ((bits[e >> 6] >> (e & 63)) & 1) {
          yes[static_cast<std::size_t>(events[e].outcome)] += events[e].weight;
          wy += events[e].weight;
        }
      if (wy <= 0.0 || wy >= nd.weight) continue;
      for (std::size_t k = 0; k < K; ++k) no[k] = nd.counts[k] - yes[k];
      const double d = parent_h - weighted_entropy(yes) - weighted_entropy(no);
      // near-ties keep the earlier question, so rounding cannot reorder them
      if (d > best + 1e-12 * nd.weight) {
        best = d;
        best_q = static_cast<int>(q);
      }
    }
    // relative threshold so that scaling all weights keeps the same tree
    if (best_q < 0 || best <= 1e-10 * nd.weight) continue;

    std::vector<std::uint32_t> in_yes, in_no;
    const auto& bits = answers[static_cast<std::size_t>(best_q)];
    for (auto e : p.idx) (((bits[e >> 6] >> (e & 63)) & 1) ? in_yes : in_no).push_back(e);
    const int depth = nd.depth + 1;
    const int c0 = make_node(in_no, depth);
    const int c1 = make_node(in_yes, depth);
    Node& parent = t.nodes_[static_cast<std::size_t>(p.node)];
    parent.question = qs[static_cast<std::size_t>(best_q)];
    parent.child[0] = c0;
    parent.child[1] = c1;
    parent.decrease = best;
    // depth-first, "no" branch first for a stable node order
    stack.push_back({c1, std::move(in_yes)});
    stack.push_back({c0, std::move(in_no)});
  }
  t.set_all_lambdas(0.0);
  return t;
}

ProbTree ProbTree::uniform(const ContextSchema& schema, int num_outcomes) {
  if (num_outcomes < 1) throw DataError("decision tree needs at least one outcome");
  ProbTree t;
  t.num_outcomes_ = num_outcomes;
  t.schema_ = schema;
  Node nd;
  nd.counts.assign(static_cast<std::size_t>(num_outcomes), 0.0);
  t.nodes_.push_back(std::move(nd));
  t.set_all_lambdas(0.0);
  return t;
}

int ProbTree::leaf(const Context& c) const {
  int id = 0;
  while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& nd = nodes_[static_cast<std::size_t>(id)];
    id = nd.child[nd.question.answer(c) ? 1 : 0];
  }
  return id;
}

int ProbTree::num_leaves() const {
  int k = 0;
  for (const auto& nd : nodes_) k += nd.is_leaf() ? 1 : 0;
  return k;
}

void ProbTree::recompute(int node, const std::vector<double>& parent) {
  auto& nd = nodes_[static_cast<std::size_t>(node)];
  nd.dist.assign(parent.size(), 0.0);
  for (std::size_t k = 0; k < parent.size(); ++k) {
    const double mle = nd.weight > 0.0 ? nd.counts[k] / nd.weight : 0.0;
    nd.dist[k] = nd.lambda * mle + (1.0 - nd.lambda) * parent[k];
  }
  if (!nd.is_leaf()) {
    const std::vector<double> mine = nd.dist;
    recompute(nd.child[0], mine);
    recompute(nd.child[1], mine);
  }
}

void ProbTree::set_all_lambdas(double lambda) {
  for (auto& nd : nodes_) nd.lambda = lambda;
  recompute(0, std::vector<double>(static_cast<std::size_t>(num_outcomes_),
                                   1.0 / num_outcomes_));
}

double fit_lambda(const std::vector<double>& heldout, const std::vector<double>& mle,
                  const std::vector<double>& parent, double max_lambda) {
  auto f = [&](double l) {
    double s = 0.0;
    for (std::size_t k = 0; k < heldout.size(); ++k)
      if (heldout[k] > 0.0) {
        const double p = l * mle[k] + (1.0 - l) * parent[k];
        if (p <= 0.0) return -HUGE_VAL;
        s += heldout[k] * std::log(p);
      }
    return s;
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = max_lambda;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-4) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  double best_l = 0.0, best_f = f(0.0);
  for (double l : {0.5 * (a + b), max_lambda}) {
    const double v = f(l);
    if (v > best_f) {
      best_f = v;
      best_l = l;
    }
  }
  return best_l;
}

void ProbTree::smooth(const std::vector<Event>& heldout) {
  const auto K = static_cast<std::size_t>(num_outcomes_);
  std::vector<std::vector<double>> h(nodes_.size(), std::vector<double>(K, 0.0));
  for (const auto& e : heldout) {
    if (e.outcome < 0 || e.outcome >= num_outcomes_) throw DataError("heldout outcome out of range");
    int id = 0;
    for (;;) {
      h[static_cast<std::size_t>(id)][static_cast<std::size_t>(e.outcome)] += e.weight;
      const auto& nd = nodes_[static_cast<std::size_t>(id)];
      if (nd.is_leaf()) break;
      id = nd.child[nd.question.answer(e.context) ? 1 : 0];
    }
  }
  // Nodes are stored parent before child.
  const std::vector<double> uniform(K, 1.0 / num_outcomes_);
  std::vector<int> parent(nodes_.size(), -1);
  for (std::size_t id = 0; id < nodes_.size(); ++id)
    if (!nodes_[id].is_leaf()) {
      parent[static_cast<std::size_t>(nodes_[id].child[0])] = static_cast<int>(id);
      parent[static_cast<std::size_t>(nodes_[id].child[1])] = static_cast<int>(id);
    }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    auto& nd = nodes_[id];
    const auto& par = parent[id] < 0 ? uniform : nodes_[static_cast<std::size_t>(parent[id])].dist;
    double hw = 0.0;
    for (double x : h[id]) hw += x;
    std::vector<double> mle(K, 0.0);
    if (nd.weight > 0.0)
      for (std::size_t k = 0; k < K; ++k) mle[k] = nd.counts[k] / nd.weight;
    // a node that saw few events, or many distinct outcomes, keeps some of
    // its parent's mass whatever the heldout data says
    double distinct = 0.0;
    for (double x : nd.counts) distinct += x > 0.0 ? 1.0 : 0.0;
    const double cap = nd.weight > 0.0 ? std::min(kMaxLambda, nd.weight / (nd.weight + distinct)) : 0.0;
    nd.lambda = hw > 0.0 ? fit_lambda(h[id], mle, par, cap) : 0.0;
    nd.dist.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) nd.dist[k] = nd.lambda * mle[k] + (1.0 - nd.lambda) * par[k];
  }
}

double ProbTree::heldout_log_likelihood(const std::vector<Event>& events) const {
  double s = 0.0;
  for (const auto& e : events)
    s += e.weight * std::log(query(e.context)[static_cast<std::size_t>(e.outcome)]);
  return s;
}

std::string ProbTree::dump(const std::vector<std::string>& outcome_names) const {
  std::ostringstream out;
  auto name = [&](std::size_t k) {
    return k < outcome_names.size() ? outcome_names[k] : std::to_string(k);
  };
  std::vector<std::pair<int, std::string>> stack{{0, ""}};
  while (!stack.empty()) {
    auto [id, label] = stack.back();
    stack.pop_back();
    const auto& nd = nodes_[static_cast<std::size_t>(id)];
    const std::string indent(static_cast<std::size_t>(nd.depth) * 2, ' ');
    char buf[256];
    std::snprintf(buf, sizeof buf, "n=%.0f lambda=%.4f", nd.weight, nd.lambda);
    out << indent << label << (label.empty() ? "" : " ") << buf;
    if (!nd.is_leaf()) out << " split " << schema_.describe(nd.question);
    out << '\n' << indent << "  dist";
    // most probable outcomes first, at most 8
    std::vector<std::size_t> order(nd.dist.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return nd.dist[a] > nd.dist[b]; });
    for (std::size_t r = 0; r < order.size() && r < 8; ++r) {
      std::snprintf(buf, sizeof buf, " %s:%.4f(%.0f)", name(order[r]).c_str(), nd.dist[order[r]],
                    nd.counts[order[r]]);
      out << buf;
    }
    out << '\n';
    if (!nd.is_leaf()) {
      stack.push_back({nd.child[1], "yes:"});
      stack.push_back({nd.child[0], "no:"});
    }
  }
  return out.str();
}

}  // namespace dlm
