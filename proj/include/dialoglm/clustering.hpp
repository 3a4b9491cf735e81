// include/dialoglm/clustering.hpp
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
#include <map>
#include <string>
#include <vector>

#include "dialoglm/corpus.hpp"
#include "dialoglm/tags.hpp"

namespace dlm {

/// Bigram statistics over symbols.  The first `num_items` symbols are
/// clustered; the rest are fixed context labels that stay singleton
/// classes (e.g. the POS tags of neighbouring words when clustering the
/// words of one tag).
struct CooccurrenceCounts {
  std::vector<std::string> labels;
  int num_items = 0;
  std::vector<double> unigram;                  // per symbol
  std::map<std::pair<int, int>, double> bigram;  // (left, right) -> count

  int num_symbols() const { return static_cast<int>(labels.size()); }
  void add_bigram(int left, int right, double count = 1.0);
};

struct MergeStep {
  std::vector<int> left;   // member items, sorted by label
  std::vector<int> right;
  double ami = 0.0;  // average mutual information after the merge
};

using BitCode = std::vector<std::uint8_t>;

/// Binary tree over items; the code of an item is its root-to-leaf path.
class ClassificationTree {
 public:
  struct Node {
    int item = -1;  // leaf item, -1 for internal nodes
    int child[2] = {-1, -1};

    template <class Archive>
    void serialize(Archive& ar) {
      ar(item, child[0], child[1]);
    }
    bool operator==(const Node& o) const {
      return item == o.item && child[0] == o.child[0] && child[1] == o.child[1];
    }
  };

  ClassificationTree() = default;
  ClassificationTree(std::vector<std::string> labels, std::vector<Node> nodes, int root);

  int num_items() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }
  int find(const std::string& label) const;  // -1 if absent
  const BitCode& encode(int item) const { return codes_.at(static_cast<std::size_t>(item)); }
  const BitCode& encode(const std::string& label) const;  // throws DataError if absent

  /// Indented tree, one leaf per line with its bit path.
  std::string dump() const;

  bool operator==(const ClassificationTree& o) const {
    return labels_ == o.labels_ && nodes_ == o.nodes_ && root_ == o.root_;
  }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(labels_, nodes_, root_);
    rebuild();
  }

 private:
  void rebuild();

  std::vector<std::string> labels_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<BitCode> codes_;
  std::map<std::string, int> index_;
};

struct ClusterResult {
  ClassificationTree tree;
  std::vector<MergeStep> merges;  // greedy phase only, in order
};

/// Greedy agglomerative clustering maximizing class-bigram average mutual
/// information.  Items without bigram mass hang under a separate subtree
/// (bit 1 at the root) built after the greedy phase.
ClusterResult brown_cluster(const CooccurrenceCounts& counts);

/// Average mutual information of the class bigram distribution where
/// `cls[s]` is the class of symbol s.
double average_mutual_information(const CooccurrenceCounts& counts, const std::vector<int>& cls);

struct ClusterSet {
  ClassificationTree pos;
  std::map<TagId, ClassificationTree> words;  // observed real tags only

  bool operator==(const ClusterSet&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(pos, words);
  }
};

inline constexpr const char* kUnkWord = "<unk>";

/// POS tree over the whole tagset (pseudo tags included) from gold item
/// sequences, and one word tree per observed real tag over the lexicon
/// words seen with it plus the UNK leaf.
ClusterSet build_trees(const std::vector<const AnnotatedTurn*>& turns,
                       const std::vector<TagSequence>& tags, const Tagset& tagset,
                       const Lexicon& lexicon, const TagMask& mask);

}  // namespace dlm
