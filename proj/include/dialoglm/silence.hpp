// include/dialoglm/silence.hpp
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
#include <vector>

#include "dialoglm/corpus.hpp"
#include "dialoglm/tags.hpp"

namespace dlm {

enum class SilenceClass : int {
  BoundaryTone,
  EtPush,
  EtPop,
  ModificationRepair,
  FreshStart,
  FluentNull,
};
inline constexpr int kNumSilenceClasses = 6;

const char* silence_class_name(SilenceClass c);

/// Per-class, per-bin factors P(class | bin) / P(class).
class SilenceModel {
 public:
  SilenceModel();  // default bins, all factors 1
  explicit SilenceModel(std::vector<double> edges);

  /// Bin 0 is silence == 0 (at or below the first edge); bin k covers
  /// (edges[k-1], edges[k]]; the last bin is everything above the last edge.
  int bin(double seconds) const;
  int num_bins() const { return static_cast<int>(edges_.size()) + 1; }
  const std::vector<double>& edges() const { return edges_; }

  double factor(SilenceClass c, double seconds) const;
  double factor_at(SilenceClass c, int bin) const;
  void set_factor(SilenceClass c, int bin, double f);
  const std::vector<std::array<double, kNumSilenceClasses>>& factors() const { return factors_; }
  const std::vector<std::array<double, kNumSilenceClasses>>& counts() const { return counts_; }

  /// Add-0.5 estimates from gold tags.  Editing-term interiors and the
  /// first word are not counted.
  void estimate(const std::vector<const AnnotatedTurn*>& turns, const std::vector<TagSequence>& tags);

  bool operator==(const SilenceModel&) const = default;
  template <class Archive>
  void serialize(Archive& ar) {
    ar(edges_, counts_, factors_);
  }

 private:
  std::vector<double> edges_;
  std::vector<std::array<double, kNumSilenceClasses>> counts_;   // per bin
  std::vector<std::array<double, kNumSilenceClasses>> factors_;  // per bin
};

std::vector<double> default_silence_edges();

/// The silence class a position's gold tags fall into; -1 when the
/// position is not counted (inside an editing term).
int silence_class_of(const PositionTags& p);

}  // namespace dlm
