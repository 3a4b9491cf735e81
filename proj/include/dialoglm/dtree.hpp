// include/dialoglm/dtree.hpp
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
#include <cstdint>
#include <string>
#include <vector>

namespace dlm {

inline constexpr int kSlots = 6;
inline constexpr int kMaxFeatures = 8;
inline constexpr int kCodeBits = 16;

/// Classification-tree codes of one context item, truncated to kCodeBits.
struct Code {
  bool present = false;
  std::uint8_t pos_len = 0;
  std::uint8_t word_len = 0;
  std::uint16_t pos_bits = 0;  // bit b = b-th edge from the root
  std::uint16_t word_bits = 0;

  bool operator==(const Code&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(present, pos_len, word_len, pos_bits, word_bits);
  }
};

struct Context {
  std::array<Code, kSlots> slot{};
  std::array<std::int8_t, kMaxFeatures> feature{-1, -1, -1, -1, -1, -1, -1, -1};

  bool operator==(const Context&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(slot, feature);
  }
};

/// A binary question about a context.  Bit questions on an absent slot, or
/// past the end of a code, answer false for both values.
struct Question {
  enum Kind : std::uint8_t { PosBit, WordBit, Feature };
  Kind kind = Feature;
  std::uint8_t index = 0;  // slot or feature
  std::uint8_t bit = 0;
  std::int8_t value = 0;

  bool answer(const Context& c) const;
  bool operator==(const Question&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(kind, index, bit, value);
  }
};

/// The variables a distribution may ask about.
struct ContextSchema {
  std::vector<std::string> slot_names;     // at most kSlots
  std::vector<std::string> feature_names;  // at most kMaxFeatures
  std::vector<int> feature_cardinality;
  int code_bits = kCodeBits;

  std::vector<Question> questions() const;
  std::string describe(const Question& q) const;

  bool operator==(const ContextSchema&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(slot_names, feature_names, feature_cardinality, code_bits);
  }
};

struct Event {
  Context context;
  int outcome = 0;
  double weight = 1.0;
};

struct TreeParams {
  int min_leaf = 8;
  int max_depth = 24;

  bool operator==(const TreeParams&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(min_leaf, max_depth);
  }
};

class ProbTree {
 public:
  struct Node {
    Question question;
    int child[2] = {-1, -1};  // child[1] answers yes
    int depth = 0;
    double weight = 0.0;
    double decrease = 0.0;  // impurity decrease of this node's split
    double lambda = 0.0;
    std::vector<double> counts;
    std::vector<double> dist;  // smoothed

    bool is_leaf() const { return child[0] < 0; }
    bool operator==(const Node& o) const = default;
    template <class Archive>
    void serialize(Archive& ar) {
      ar(question, child[0], child[1], depth, weight, decrease, lambda, counts, dist);
    }
  };

  ProbTree() = default;

  /// Greedy entropy-reduction growth.  Distributions start as the uniform
  /// backoff chain (all lambdas 0) until smooth() is called.
  static ProbTree grow(const std::vector<Event>& events, const ContextSchema& schema,
                       int num_outcomes, const TreeParams& params);

  /// Single root node with no events: the uniform distribution.
  static ProbTree uniform(const ContextSchema& schema, int num_outcomes);

  /// Per-node interpolation weights fitted top-down on heldout events.
  void smooth(const std::vector<Event>& heldout);
  /// Sets every lambda to `lambda` and recomputes distributions.
  void set_all_lambdas(double lambda);

  int leaf(const Context& c) const;
  const std::vector<double>& query(const Context& c) const { return nodes_[static_cast<std::size_t>(leaf(c))].dist; }
  double heldout_log_likelihood(const std::vector<Event>& events) const;

  int num_outcomes() const { return num_outcomes_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int num_leaves() const;
  const ContextSchema& schema() const { return schema_; }

  std::string dump(const std::vector<std::string>& outcome_names) const;

  bool operator==(const ProbTree&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(num_outcomes_, schema_, nodes_);
  }

  static constexpr double kMaxLambda = 1.0 - 1e-6;

 private:
  void recompute(int node, const std::vector<double>& parent);

  int num_outcomes_ = 0;
  ContextSchema schema_;
  std::vector<Node> nodes_;
};

/// Count-weighted entropy W*H (nats) of an outcome count vector.
double weighted_entropy(const std::vector<double>& counts);

/// Best golden-section lambda for sum_y h(y) log(l*mle(y) + (1-l)*parent(y)).
double fit_lambda(const std::vector<double>& heldout, const std::vector<double>& mle,
                  const std::vector<double>& parent, double max_lambda);

}  // namespace dlm
