// src/clustering.cpp
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

#include "dialoglm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

void CooccurrenceCounts::add_bigram(int left, int right, double count) {
  bigram[{left, right}] += count;
}

ClassificationTree::ClassificationTree(std::vector<std::string> labels, std::vector<Node> nodes,
                                       int root)
    : labels_(std::move(labels)), nodes_(std::move(nodes)), root_(root) {
  rebuild();
}

void ClassificationTree::rebuild() {
  codes_.assign(labels_.size(), {});
  index_.clear();
  for (std::size_t i = 0; i < labels_.size(); ++i) index_[labels_[i]] = static_cast<int>(i);
  if (root_ < 0) return;
  BitCode path;
  std::function<void(int)> walk = [&](int id) {
    const auto& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.item >= 0) {
      codes_[static_cast<std::size_t>(nd.item)] = path;
      return;
    }
    for (int b = 0; b < 2; ++b) {
      path.push_back(static_cast<std::uint8_t>(b));
      walk(nd.child[b]);
      path.pop_back();
    }
  };
  walk(root_);
}

int ClassificationTree::find(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

const BitCode& ClassificationTree::encode(const std::string& label) const {
  int i = find(label);
  if (i < 0) throw DataError("item '" + label + "' is not in the classification tree");
  return encode(i);
}

std::string ClassificationTree::dump() const {
  std::ostringstream out;
  if (root_ < 0) return "";
  std::string path;
  std::function<void(int, int)> walk = [&](int id, int depth) {
    const auto& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.item >= 0) {
      out << std::string(static_cast<std::size_t>(depth) * 2, ' ')
          << labels_[static_cast<std::size_t>(nd.item)] << ' '
          << (path.empty() ? "-" : path) << '\n';
      return;
    }
    for (int b = 0; b < 2; ++b) {
      path.push_back(static_cast<char>('0' + b));
      walk(nd.child[b], depth + 1);
      path.pop_back();
    }
  };
  walk(root_, 0);
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

inline double term(double n, double l, double r, double total) {
  if (n <= 0.0) return 0.0;
  return n / total * std::log(n * total / (l * r));
}

struct Clusterer {
  explicit Clusterer(const CooccurrenceCounts& counts) : c(counts) {}

  const CooccurrenceCounts& c;
  int k = 0;  // number of classes (items first, then fixed)
  std::vector<std::vector<double>> n;
  std::vector<double> left, right;
  std::vector<bool> alive, mergeable;
  std::vector<std::vector<int>> members;
  std::vector<int> node;
  double total = 0.0;

  const std::string& key(int cls) const {
    return c.labels[static_cast<std::size_t>(members[static_cast<std::size_t>(cls)].front())];
  }

  double delta(int a, int b) const {
    const auto A = static_cast<std::size_t>(a), B = static_cast<std::size_t>(b);
    const double la = left[A], lb = left[B], ra = right[A], rb = right[B];
    double before = 0.0, after = 0.0;
    for (int y = 0; y < k; ++y) {
      const auto Y = static_cast<std::size_t>(y);
      if (!alive[Y] || y == a || y == b) continue;
      before += term(n[A][Y], la, right[Y], total) + term(n[B][Y], lb, right[Y], total) +
                term(n[Y][A], left[Y], ra, total) + term(n[Y][B], left[Y], rb, total);
      after += term(n[A][Y] + n[B][Y], la + lb, right[Y], total) +
               term(n[Y][A] + n[Y][B], left[Y], ra + rb, total);
    }
    before += term(n[A][A], la, ra, total) + term(n[A][B], la, rb, total) +
              term(n[B][A], lb, ra, total) + term(n[B][B], lb, rb, total);
    after += term(n[A][A] + n[A][B] + n[B][A] + n[B][B], la + lb, ra + rb, total);
    return after - before;
  }

  void merge(int a, int b) {
    const auto A = static_cast<std::size_t>(a), B = static_cast<std::size_t>(b);
    for (int y = 0; y < k; ++y) {
      const auto Y = static_cast<std::size_t>(y);
      n[A][Y] += n[B][Y];
      n[B][Y] = 0.0;
    }
    for (int y = 0; y < k; ++y) {
      const auto Y = static_cast<std::size_t>(y);
      n[Y][A] += n[Y][B];
      n[Y][B] = 0.0;
    }
    left[A] += left[B];
    right[A] += right[B];
    alive[B] = false;
    auto& ma = members[A];
    ma.insert(ma.end(), members[B].begin(), members[B].end());
    std::sort(ma.begin(), ma.end(), [&](int x, int y) {
      return c.labels[static_cast<std::size_t>(x)] < c.labels[static_cast<std::size_t>(y)];
    });
  }
};

}  // namespace

double average_mutual_information(const CooccurrenceCounts& counts, const std::vector<int>& cls) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> left, right;
  double total = 0.0;
  for (const auto& [lr, v] : counts.bigram) {
    int a = cls.at(static_cast<std::size_t>(lr.first));
    int b = cls.at(static_cast<std::size_t>(lr.second));
    joint[{a, b}] += v;
    left[a] += v;
    right[b] += v;
    total += v;
  }
  double ami = 0.0;
  for (const auto& [ab, v] : joint) ami += term(v, left[ab.first], right[ab.second], total);
  return ami;
}

ClusterResult brown_cluster(const CooccurrenceCounts& counts) {
  const int m = counts.num_items;
  const int s = counts.num_symbols();
  if (m <= 0) throw DataError("cannot cluster an empty item set");

  Clusterer cl(counts);
  cl.k = s;
  cl.n.assign(static_cast<std::size_t>(s), std::vector<double>(static_cast<std::size_t>(s), 0.0));
  cl.left.assign(static_cast<std::size_t>(s), 0.0);
  cl.right.assign(static_cast<std::size_t>(s), 0.0);
  for (const auto& [lr, v] : counts.bigram) {
    if (v <= 0.0) continue;
    cl.n[static_cast<std::size_t>(lr.first)][static_cast<std::size_t>(lr.second)] += v;
    cl.left[static_cast<std::size_t>(lr.first)] += v;
    cl.right[static_cast<std::size_t>(lr.second)] += v;
    cl.total += v;
  }
  cl.alive.assign(static_cast<std::size_t>(s), true);
  cl.mergeable.assign(static_cast<std::size_t>(s), false);
  cl.members.resize(static_cast<std::size_t>(s));
  cl.node.assign(static_cast<std::size_t>(s), -1);

  std::vector<ClassificationTree::Node> nodes;
  std::vector<int> rare;
  for (int i = 0; i < s; ++i) cl.members[static_cast<std::size_t>(i)] = {i};
  for (int i = 0; i < m; ++i) {
    const auto I = static_cast<std::size_t>(i);
    nodes.push_back({i, {-1, -1}});
    cl.node[I] = static_cast<int>(nodes.size()) - 1;
    if (cl.left[I] + cl.right[I] > 0.0) cl.mergeable[I] = true;
    else {
      rare.push_back(i);
      cl.alive[I] = false;
    }
  }

  ClusterResult res;
  std::vector<int> cls(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) cls[static_cast<std::size_t>(i)] = i;
  double ami = cl.total > 0.0 ? average_mutual_information(counts, cls) : 0.0;

  auto active = [&]() {
    std::vector<int> out;
    for (int i = 0; i < m; ++i)
      if (cl.alive[static_cast<std::size_t>(i)] && cl.mergeable[static_cast<std::size_t>(i)])
        out.push_back(i);
    std::sort(out.begin(), out.end(), [&](int a, int b) { return cl.key(a) < cl.key(b); });
    return out;
  };

  for (auto act = active(); act.size() > 1; act = active()) {
    int ba = -1, bb = -1;
    double best = 0.0;
    for (std::size_t x = 0; x < act.size(); ++x)
      for (std::size_t y = x + 1; y < act.size(); ++y) {
        double d = cl.delta(act[x], act[y]);
        // act is sorted by smallest member, so the first pair seen wins ties
        if (ba < 0 || d > best + 1e-12 * std::max(1.0, std::fabs(best))) {
          best = d;
          ba = act[x];
          bb = act[y];
        }
      }
    MergeStep step;
    step.left = cl.members[static_cast<std::size_t>(ba)];
    step.right = cl.members[static_cast<std::size_t>(bb)];
    nodes.push_back({-1, {cl.node[static_cast<std::size_t>(ba)], cl.node[static_cast<std::size_t>(bb)]}});
    cl.merge(ba, bb);
    cl.node[static_cast<std::size_t>(ba)] = static_cast<int>(nodes.size()) - 1;
    ami += best;
    step.ami = ami;
    res.merges.push_back(std::move(step));
  }

  int main_root = -1;
  for (int i = 0; i < m; ++i)
    if (cl.alive[static_cast<std::size_t>(i)] && cl.mergeable[static_cast<std::size_t>(i)])
      main_root = cl.node[static_cast<std::size_t>(i)];

  std::sort(rare.begin(), rare.end(), [&](int a, int b) {
    return counts.labels[static_cast<std::size_t>(a)] < counts.labels[static_cast<std::size_t>(b)];
  });
  std::function<int(std::size_t, std::size_t)> balanced = [&](std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return cl.node[static_cast<std::size_t>(rare[lo])];
    std::size_t mid = lo + (hi - lo + 1) / 2;
    int l = balanced(lo, mid), r = balanced(mid, hi);
    nodes.push_back({-1, {l, r}});
    return static_cast<int>(nodes.size()) - 1;
  };
  int rare_root = rare.empty() ? -1 : balanced(0, rare.size());

  int root = main_root;
  if (main_root < 0) root = rare_root;
  else if (rare_root >= 0) {
    nodes.push_back({-1, {main_root, rare_root}});
    root = static_cast<int>(nodes.size()) - 1;
  }
  std::vector<std::string> labels(counts.labels.begin(), counts.labels.begin() + m);
  res.tree = ClassificationTree(std::move(labels), std::move(nodes), root);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

// Uncleaned item sequence of a turn: pseudo tags for every non-null tag
// (ET skipped) interleaved with the words' POS tags.
std::vector<TagId> item_sequence(const TagSequence& ts, const Tagset& tagset,
                                 std::vector<int>* token_of = nullptr) {
  std::vector<TagId> seq;
  auto push = [&](TagId t, int tok) {
    seq.push_back(t);
    if (token_of) token_of->push_back(tok);
  };
  push(tagset.pseudo(PseudoTag::Turn), -1);
  for (int i = 0; i < ts.size(); ++i) {
    const auto& p = ts.at[static_cast<std::size_t>(i)];
    if (p.tone == Tone::T) push(tagset.pseudo(PseudoTag::Tone), -1);
    if (p.edit == Edit::Push) push(tagset.pseudo(PseudoTag::Push), -1);
    if (p.edit == Edit::Pop) push(tagset.pseudo(PseudoTag::Pop), -1);
    if (p.repair == RepairTag::Mod) push(tagset.pseudo(PseudoTag::Mod), -1);
    if (p.repair == RepairTag::Can) push(tagset.pseudo(PseudoTag::Can), -1);
    if (p.repair == RepairTag::Abr) push(tagset.pseudo(PseudoTag::Abr), -1);
    push(ts.pos[static_cast<std::size_t>(i)], i);
  }
  if (ts.final_tone) push(tagset.pseudo(PseudoTag::Tone), -1);
  return seq;
}

}  // namespace

ClusterSet build_trees(const std::vector<const AnnotatedTurn*>& turns,
                       const std::vector<TagSequence>& tags, const Tagset& tagset,
                       const Lexicon& lexicon, const TagMask& mask) {
  std::vector<std::vector<TagId>> seqs;
  std::vector<std::vector<int>> tok_of;
  for (std::size_t t = 0; t < turns.size(); ++t) {
    tok_of.emplace_back();
    seqs.push_back(item_sequence(mask_tags(tags[t], mask), tagset, &tok_of.back()));
  }

  ClusterSet out;
  {
    CooccurrenceCounts c;
    for (const auto& ti : tagset.all()) c.labels.push_back(ti.name);
    c.num_items = tagset.size();
    c.unigram.assign(static_cast<std::size_t>(tagset.size()), 0.0);
    for (const auto& s : seqs)
      for (std::size_t k = 0; k < s.size(); ++k) {
        c.unigram[static_cast<std::size_t>(s[k])] += 1.0;
        if (k > 0) c.add_bigram(s[k - 1], s[k]);
      }
    out.pos = brown_cluster(c).tree;
  }

  std::set<TagId> observed;
  for (const auto& ts : tags)
    for (TagId p : ts.pos) observed.insert(p);

  for (TagId p : observed) {
    std::set<int> ids;
    for (std::size_t t = 0; t < turns.size(); ++t)
      for (std::size_t k = 0; k < turns[t]->tokens.size(); ++k)
        if (tags[t].pos[k] == p) ids.insert(lexicon.id(turns[t]->tokens[k].surface));
    ids.insert(-1);
    CooccurrenceCounts c;
    std::map<int, int> item_of;  // lexicon id -> item
    for (int id : ids) {  // -1 first; labels sorted below via the tree
      item_of[id] = static_cast<int>(c.labels.size());
      c.labels.push_back(id < 0 ? kUnkWord : lexicon.word(id));
    }
    c.num_items = static_cast<int>(c.labels.size());
    const int fixed0 = c.num_items;
    for (const auto& ti : tagset.all()) c.labels.push_back("#" + ti.name);
    c.unigram.assign(c.labels.size(), 0.0);
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const auto& s = seqs[t];
      int prev = -1;
      for (std::size_t k = 0; k < s.size(); ++k) {
        int sym;
        if (s[k] == p && tok_of[t][k] >= 0)
          sym = item_of[lexicon.id(turns[t]->tokens[static_cast<std::size_t>(tok_of[t][k])].surface)];
        else sym = fixed0 + s[k];
        c.unigram[static_cast<std::size_t>(sym)] += 1.0;
        if (prev >= 0) c.add_bigram(prev, sym);
        prev = sym;
      }
    }
    out.words.emplace(p, brown_cluster(c).tree);
  }
  return out;
}

}  // namespace dlm
