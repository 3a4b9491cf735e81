// src/silence.cpp
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

#include "dialoglm/silence.hpp"

#include <algorithm>
#include <cmath>

#include "dialoglm/error.hpp"

namespace dlm {

const char* silence_class_name(SilenceClass c) {
  switch (c) {
    case SilenceClass::BoundaryTone: return "boundary_tone";
    case SilenceClass::EtPush: return "et_push";
    case SilenceClass::EtPop: return "et_pop";
    case SilenceClass::ModificationRepair: return "modification_repair";
    case SilenceClass::FreshStart: return "fresh_start";
    case SilenceClass::FluentNull: return "fluent_null";
  }
  return "?";
}

std::vector<double> default_silence_edges() { return {0.0, 0.1, 0.25, 0.5, 1.0, 2.0}; }

SilenceModel::SilenceModel() : SilenceModel(default_silence_edges()) {}

SilenceModel::SilenceModel(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.empty()) throw UsageError("silence bins need at least one edge");
  for (std::size_t k = 1; k < edges_.size(); ++k)
    if (!(edges_[k] > edges_[k - 1])) throw UsageError("silence bin edges must increase");
  std::array<double, kNumSilenceClasses> ones;
  ones.fill(1.0);
  std::array<double, kNumSilenceClasses> zeros{};
  factors_.assign(static_cast<std::size_t>(num_bins()), ones);
  counts_.assign(static_cast<std::size_t>(num_bins()), zeros);
}

int SilenceModel::bin(double seconds) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), seconds);
  return static_cast<int>(it - edges_.begin());
}

double SilenceModel::factor_at(SilenceClass c, int b) const {
  return factors_.at(static_cast<std::size_t>(b))[static_cast<std::size_t>(c)];
}

void SilenceModel::set_factor(SilenceClass c, int b, double f) {
  if (!(f > 0.0) || !std::isfinite(f)) throw UsageError("silence factor must be positive and finite");
  factors_.at(static_cast<std::size_t>(b))[static_cast<std::size_t>(c)] = f;
}

double SilenceModel::factor(SilenceClass c, double seconds) const {
  return factor_at(c, bin(seconds));
}

int silence_class_of(const PositionTags& p) {
  if (p.edit == Edit::Null && p.repair == RepairTag::Mod)
    return static_cast<int>(SilenceClass::ModificationRepair);
  if (p.edit == Edit::Null && p.repair == RepairTag::Can)
    return static_cast<int>(SilenceClass::FreshStart);
  if (p.edit == Edit::Push) return static_cast<int>(SilenceClass::EtPush);
  if (p.edit == Edit::Pop) return static_cast<int>(SilenceClass::EtPop);
  if (p.edit == Edit::ET) return -1;
  if (p.tone == Tone::T) return static_cast<int>(SilenceClass::BoundaryTone);
  return static_cast<int>(SilenceClass::FluentNull);
}

void SilenceModel::estimate(const std::vector<const AnnotatedTurn*>& turns,
                            const std::vector<TagSequence>& tags) {
  const auto B = static_cast<std::size_t>(num_bins());
  const auto C = static_cast<std::size_t>(kNumSilenceClasses);
  for (auto& row : counts_) row.fill(0.0);
  for (std::size_t t = 0; t < turns.size(); ++t)
    for (int i = 1; i < turns[t]->size(); ++i) {
      int c = silence_class_of(tags[t].at[static_cast<std::size_t>(i)]);
      if (c < 0) continue;
      int b = bin(turns[t]->tokens[static_cast<std::size_t>(i)].silence_before);
      counts_[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)] += 1.0;
    }
  std::array<double, kNumSilenceClasses> class_total{};
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      class_total[c] += counts_[b][c] + 0.5;
      total += counts_[b][c] + 0.5;
    }
  for (std::size_t b = 0; b < B; ++b) {
    double bin_total = 0.0;
    for (std::size_t c = 0; c < C; ++c) bin_total += counts_[b][c] + 0.5;
    for (std::size_t c = 0; c < C; ++c) {
      const double p_c_given_b = (counts_[b][c] + 0.5) / bin_total;
      const double p_c = class_total[c] / total;
      factors_[b][c] = p_c_given_b / p_c;
    }
  }
}

}  // namespace dlm
