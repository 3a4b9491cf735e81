// src/model.cpp
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

#include "dialoglm/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dialoglm/error.hpp"

namespace dlm {

const char* stage_name(Stage s) {
  static const char* names[] = {"T", "E", "R", "O", "L", "C", "P", "W"};
  return names[static_cast<int>(s)];
}

void ModelConfig::validate() const {
  if (mask.corrections && !mask.repairs)
    throw UsageError("corrections require repairs (enable repairs or disable corrections)");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0))
    throw UsageError("heldout fraction must be in [0, 1)");
  if (tree.min_leaf < 1) throw UsageError("min_leaf must be at least 1");
  if (tree.max_depth < 0) throw UsageError("max_depth must be nonnegative");
  if (mod_onset_window < 1) throw UsageError("modification onset window must be at least 1");
  if (!(unk_divisor > 0.0)) throw UsageError("UNK divisor must be positive");
  if (vocab_min_count < 1) throw UsageError("vocabulary min count must be at least 1");
  SilenceModel check(silence_edges);
}

double FactorRow::product() const {
  return t * e * r * o.value_or(1.0) * l.value_or(1.0) * c.value_or(1.0) * p * w;
}

double joint_probability(const std::vector<FactorRow>& rows) {
  double logp = 0.0;
  for (const auto& r : rows) logp += std::log(r.product());
  return std::exp(logp);
}

std::vector<std::size_t> heldout_dialogs(std::size_t num_dialogs, double fraction,
                                         std::uint64_t seed) {
  if (fraction <= 0.0) return {};
  if (num_dialogs < 2)
    throw DataError("cannot split a heldout set: need at least 2 dialogs, corpus has " +
                    std::to_string(num_dialogs));
  std::vector<std::size_t> order(num_dialogs);
  for (std::size_t i = 0; i < num_dialogs; ++i) order[i] = i;
  // Fisher-Yates with explicit rejection sampling; the standard library's
  // shuffle and distributions are not portable across implementations.
  std::mt19937_64 rng(seed);
  for (std::size_t i = num_dialogs - 1; i > 0; --i) {
    const std::uint64_t range = i + 1;
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % range;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    std::swap(order[i], order[static_cast<std::size_t>(x % range)]);
  }
  auto h = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(num_dialogs)));
  h = std::clamp<std::size_t>(h, 1, num_dialogs - 1);
  order.resize(h);
  std::sort(order.begin(), order.end());
  return order;
}

// ---------------------------------------------------------------------------
// schemas

namespace {

enum { kFeatInEt, kFeatNpEt, kFeatRepairActive, kFeatTurnEndOrTone, kFeatEdit };

ContextSchema make_schema(std::vector<std::string> slots, std::vector<std::string> feats,
                          std::vector<int> card) {
  ContextSchema s;
  s.slot_names = std::move(slots);
  s.feature_names = std::move(feats);
  s.feature_cardinality = std::move(card);
  return s;
}

int distance_bucket(int d) {
  if (d <= 3) return std::max(d, 1) - 1;
  if (d <= 5) return 3;
  return 4;
}

std::int8_t b8(bool b) { return b ? 1 : 0; }

}  // namespace

ContextSchema JointModel::schema(Stage st) {
  const std::vector<std::string> hist = {"h0", "h1", "h2", "h3"};
  switch (st) {
    case Stage::T:
      return make_schema(hist, {"in_et", "npfp_et", "repair_active", "turn_end"}, {2, 2, 2, 2});
    case Stage::E:
      return make_schema(hist, {"in_et", "npfp_et", "repair_active", "tone"}, {2, 2, 2, 2});
    case Stage::R:
      return make_schema(hist, {"in_et", "npfp_et", "repair_active", "tone", "edit"},
                         {2, 2, 2, 2, 4});
    case Stage::O:
      return make_schema({"cand", "before", "rep_end", "h0", "h1", "after"},
                         {"repair", "has_et", "npfp_et", "cand_dm", "cand_fp", "cand_tone",
                          "cand_overlap", "distance"},
                         {2, 2, 2, 2, 2, 2, 2, 5});
    case Stage::L:
      return make_schema({"cand", "h0", "cand_next", "h1"},
                         {"repair", "cand_offset", "alt_offset", "prev_corr"}, {2, 4, 4, 4});
    case Stage::C:
      return make_schema({"license", "h0", "h1", "h2"},
                         {"repair", "license_first", "alt_offset", "prev_corr"}, {2, 2, 4, 4});
    case Stage::P:
    case Stage::W:
      return make_schema({"h0", "h1", "h2", "h3", "license"}, {"corr", "et_word"}, {4, 2});
  }
  return {};
}

// ---------------------------------------------------------------------------
// encoding

namespace {

Code to_code(const BitCode& bits, bool word) {
  Code c;
  c.present = true;
  const auto len = static_cast<std::uint8_t>(std::min<std::size_t>(bits.size(), kCodeBits));
  std::uint16_t v = 0;
  for (std::size_t b = 0; b < len; ++b)
    if (bits[b]) v = static_cast<std::uint16_t>(v | (1u << b));
  if (word) {
    c.word_len = len;
    c.word_bits = v;
  } else {
    c.pos_len = len;
    c.pos_bits = v;
  }
  return c;
}

}  // namespace

void JointModel::rebuild_tables() {
  const auto T = static_cast<std::size_t>(tagset_.size());
  const auto V = static_cast<std::size_t>(lexicon_.size()) + 1;
  pos_code_.assign(T, Code{});
  for (std::size_t t = 0; t < T; ++t) {
    const int item = clusters_.pos.find(tagset_.name(static_cast<TagId>(t)));
    if (item >= 0) pos_code_[t] = to_code(clusters_.pos.encode(item), false);
    else pos_code_[t].present = true;
  }
  word_code_.assign(T, {});
  word_index_.assign(T, {});
  compatible_known_.assign(V - 1, 0);
  for (const auto& [tag, tree] : clusters_.words) {
    auto& codes = word_code_[static_cast<std::size_t>(tag)];
    codes.assign(V, Code{});
    const int unk = tree.find(kUnkWord);
    const BitCode empty;
    const BitCode& unk_bits = unk >= 0 ? tree.encode(unk) : empty;
    for (std::size_t w = 0; w < V; ++w) {
      int item = w == 0 ? unk : tree.find(lexicon_.word(static_cast<int>(w) - 1));
      codes[w] = to_code(item >= 0 ? tree.encode(item) : unk_bits, true);
    }
  }
  for (const auto& [tag, vocab] : word_vocab_) {
    auto& idx = word_index_[static_cast<std::size_t>(tag)];
    idx.assign(V, -1);
    idx[0] = static_cast<int>(vocab.size());  // UNK
    const bool frag = tagset_.info(tag).is_fragment;
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      idx[static_cast<std::size_t>(vocab[k]) + 1] = static_cast<int>(k);
      compatible_known_[static_cast<std::size_t>(vocab[k])] |= frag ? 2 : 1;
    }
  }
  pos_index_.assign(T, -1);
  for (std::size_t k = 0; k < pos_outcomes_.size(); ++k)
    pos_index_[static_cast<std::size_t>(pos_outcomes_[k])] = static_cast<int>(k);
}

Code JointModel::item_code(const Item& it, const TurnInput& in) const {
  Code c = pos_code_[static_cast<std::size_t>(it.tag)];
  if (!it.is_word()) return c;
  const auto& codes = word_code_[static_cast<std::size_t>(it.tag)];
  if (codes.empty()) return c;
  const Code& wc = codes[static_cast<std::size_t>(in.words[static_cast<std::size_t>(it.token)] + 1)];
  c.word_len = wc.word_len;
  c.word_bits = wc.word_bits;
  return c;
}

Code JointModel::token_code(int k, const TurnState& s, const TurnInput& in) const {
  if (k < 0 || k >= s.position()) return Code{};
  return item_code(Item{k, 3, s.token_tag(k), k}, in);
}

Context JointModel::context(Stage st, const TurnState& s, const TurnInput& in,
                            int candidate) const {
  Context c;
  const auto& items = s.items();
  auto hist = [&](int k) {
    const int idx = static_cast<int>(items.size()) - 1 - k;
    return idx >= 0 ? item_code(items[static_cast<std::size_t>(idx)], in) : Code{};
  };
  auto& f = c.feature;
  const int i = s.position();
  switch (st) {
    case Stage::T:
    case Stage::E:
    case Stage::R:
      for (int k = 0; k < 4; ++k) c.slot[static_cast<std::size_t>(k)] = hist(k);
      f[kFeatInEt] = b8(s.in_editing_term());
      f[kFeatNpEt] = b8(s.nonfilledpause_et_seen());
      f[kFeatRepairActive] = b8(s.window_active());
      if (st == Stage::T) f[kFeatTurnEndOrTone] = b8(i == s.length());
      else f[kFeatTurnEndOrTone] = b8(s.tone() == Tone::T);
      if (st == Stage::R) f[kFeatEdit] = static_cast<std::int8_t>(s.edit());
      break;
    case Stage::O: {
      const int ip = s.repair_ip();
      c.slot[0] = token_code(candidate, s, in);
      c.slot[1] = token_code(candidate - 1, s, in);
      c.slot[2] = token_code(ip - 1, s, in);
      c.slot[3] = hist(0);
      c.slot[4] = hist(1);
      c.slot[5] = candidate + 1 < ip ? token_code(candidate + 1, s, in) : Code{};
      const auto feats = s.features(Span{candidate, ip});
      f[0] = b8(s.repair() == RepairTag::Can);
      f[1] = b8(s.has_editing_term());
      f[2] = b8(s.nonfilledpause_et_seen());
      f[3] = b8(feats.cand_has_discourse_marker);
      f[4] = b8(feats.cand_has_unattached_filled_pause);
      f[5] = b8(feats.cand_has_boundary_tone);
      f[6] = b8(feats.cand_overlaps_prior_repair);
      f[7] = static_cast<std::int8_t>(distance_bucket(ip - candidate));
      break;
    }
    case Stage::L:
      c.slot[0] = token_code(candidate, s, in);
      c.slot[1] = hist(0);
      c.slot[2] = candidate + 1 < s.window_ip() ? token_code(candidate + 1, s, in) : Code{};
      c.slot[3] = hist(1);
      f[0] = b8(s.window_kind() == RepairTag::Can);
      f[1] = static_cast<std::int8_t>(std::min(candidate - s.window_next(), 3));
      f[2] = static_cast<std::int8_t>(std::min(s.window_alt_offset(), 3));
      f[3] = static_cast<std::int8_t>(s.window_prev_corr());
      break;
    case Stage::C:
      c.slot[0] = token_code(candidate, s, in);
      c.slot[1] = hist(0);
      c.slot[2] = hist(1);
      c.slot[3] = hist(2);
      f[0] = b8(s.window_kind() == RepairTag::Can);
      f[1] = b8(candidate == s.window_next());
      f[2] = static_cast<std::int8_t>(std::min(s.window_alt_offset(), 3));
      f[3] = static_cast<std::int8_t>(s.window_prev_corr());
      break;
    case Stage::P:
    case Stage::W:
      for (int k = 0; k < 4; ++k) c.slot[static_cast<std::size_t>(k)] = hist(k);
      c.slot[4] = s.corr() != Corr::None ? token_code(s.license(), s, in) : Code{};
      f[0] = static_cast<std::int8_t>(s.corr());
      f[1] = b8(s.in_editing_term());
      break;
  }
  return c;
}

TurnInput JointModel::make_input(const AnnotatedTurn& turn) const {
  TurnInput in;
  for (const auto& tok : turn.tokens) {
    in.surfaces.push_back(tok.surface);
    in.words.push_back(lexicon_.id(tok.surface));
    in.fragment.push_back(tok.is_fragment ? 1 : 0);
    in.silence.push_back(tok.silence_before);
  }
  return in;
}

const ProbTree& JointModel::tree(Stage s) const {
  if (s == Stage::W) throw UsageError("W is a per-tag family; use word_trees()");
  return trees_[static_cast<std::size_t>(s)];
}

const std::vector<int>& JointModel::word_outcomes(TagId tag) const {
  static const std::vector<int> none;
  auto it = word_vocab_.find(tag);
  return it == word_vocab_.end() ? none : it->second;
}

int JointModel::word_outcome(TagId tag, int word) const {
  const auto& idx = word_index_[static_cast<std::size_t>(tag)];
  if (idx.empty()) return -1;
  return idx[static_cast<std::size_t>(word + 1)];
}

std::vector<std::string> JointModel::outcome_names(Stage st, TagId tag) const {
  switch (st) {
    case Stage::T: return {"null", "T"};
    case Stage::E: return {"null", "Push", "ET", "Pop"};
    case Stage::R: return {"null", "M", "C", "A"};
    case Stage::O: return {"no", "onset"};
    case Stage::L: return {"no", "license"};
    case Stage::C: return {"m", "r", "x"};
    case Stage::P: {
      std::vector<std::string> out;
      for (TagId t : pos_outcomes_) out.push_back(tagset_.name(t));
      out.push_back("<same>");
      return out;
    }
    case Stage::W: {
      std::vector<std::string> out;
      for (int w : word_outcomes(tag)) out.push_back(lexicon_.word(w));
      out.push_back(kUnkWord);
      out.push_back("<copy>");
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// distributions

double JointModel::silence_factor(int cls, const TurnState& s, const TurnInput& in) const {
  const int i = s.position();
  if (!config_.silences || cls < 0 || i <= 0 || i >= in.size()) return 1.0;
  return silence_.factor(static_cast<SilenceClass>(cls), in.silence[static_cast<std::size_t>(i)]);
}

namespace {

template <std::size_t N>
void normalize(std::array<double, N>& p) {
  double z = 0.0;
  for (double x : p) z += x;
  if (z <= 0.0) throw DataError("no admissible value has positive probability");
  for (double& x : p) x /= z;
}

constexpr int kFluent = static_cast<int>(SilenceClass::FluentNull);

}  // namespace

std::vector<double> JointModel::raw_distribution(Stage st, const TurnState& s,
                                                 const TurnInput& in) const {
  return tree(st).query(context(st, s, in));
}

std::array<double, kNumTone> JointModel::tone_probs(const TurnState& s, const TurnInput& in) const {
  if (!config_.mask.tones || s.position() == 0) return {1.0, 0.0};
  const auto& q = tree(Stage::T).query(context(Stage::T, s, in));
  std::array<double, kNumTone> p{
      q[0] * silence_factor(kFluent, s, in),
      q[1] * silence_factor(static_cast<int>(SilenceClass::BoundaryTone), s, in)};
  normalize(p);
  return p;
}

std::array<double, kNumEdit> JointModel::edit_probs(const TurnState& s, const TurnInput& in) const {
  std::array<double, kNumEdit> p{};
  if (!config_.mask.repairs) return {1.0, 0.0, 0.0, 0.0};
  const bool in_et = s.in_editing_term();
  if (!in_et && s.position() == 0) return {1.0, 0.0, 0.0, 0.0};
  const auto& q = tree(Stage::E).query(context(Stage::E, s, in));
  if (in_et) {
    p[static_cast<int>(Edit::ET)] = q[static_cast<int>(Edit::ET)];
    p[static_cast<int>(Edit::Pop)] =
        q[static_cast<int>(Edit::Pop)] * silence_factor(static_cast<int>(SilenceClass::EtPop), s, in);
  } else {
    p[static_cast<int>(Edit::Null)] = q[static_cast<int>(Edit::Null)] * silence_factor(kFluent, s, in);
    p[static_cast<int>(Edit::Push)] =
        q[static_cast<int>(Edit::Push)] * silence_factor(static_cast<int>(SilenceClass::EtPush), s, in);
  }
  normalize(p);
  return p;
}

std::vector<int> JointModel::onset_candidates(const TurnState& s) const {
  return s.onset_candidates(s.repair(), config_.mod_onset_window);
}

bool JointModel::mc_admissible(const TurnState& s) const {
  const int ip = s.repair_ip();
  if (ip < 1) return false;
  // M and C candidate ranges share their lower bound from the last fresh
  // start, so both are empty or both are not.
  return !config_.mask.corrections ||
         !s.onset_candidates(RepairTag::Mod, config_.mod_onset_window).empty();
}

std::array<double, kNumRepair> JointModel::repair_probs(const TurnState& s,
                                                        const TurnInput& in) const {
  const Edit e = s.edit();
  if (!config_.mask.repairs || e == Edit::Push || e == Edit::ET) return {1.0, 0.0, 0.0, 0.0};
  const bool mc = mc_admissible(s);
  if (e == Edit::Null && !mc) return {1.0, 0.0, 0.0, 0.0};
  if (e == Edit::Pop && !mc) return {0.0, 0.0, 0.0, 1.0};
  const auto& q = tree(Stage::R).query(context(Stage::R, s, in));
  std::array<double, kNumRepair> p{};
  if (e == Edit::Pop) {
    p[1] = q[1];
    p[2] = q[2];
    p[3] = q[3];
  } else {
    p[0] = q[0] * silence_factor(kFluent, s, in);
    p[1] = q[1] * silence_factor(static_cast<int>(SilenceClass::ModificationRepair), s, in);
    p[2] = q[2] * silence_factor(static_cast<int>(SilenceClass::FreshStart), s, in);
  }
  normalize(p);
  return p;
}

std::vector<double> JointModel::onset_probs(const TurnState& s, const TurnInput& in,
                                            const std::vector<int>& candidates) const {
  if (candidates.empty()) throw DataError("onset distribution over no candidates");
  std::vector<double> p;
  double z = 0.0;
  for (int o : candidates) {
    p.push_back(tree(Stage::O).query(context(Stage::O, s, in, o))[1]);
    z += p.back();
  }
  for (double& x : p) x /= z;
  return p;
}

std::vector<double> JointModel::license_probs(const TurnState& s, const TurnInput& in,
                                              const std::vector<int>& candidates) const {
  if (candidates.empty()) throw DataError("license distribution over no candidates");
  std::vector<double> p;
  double z = 0.0;
  for (int l : candidates) {
    p.push_back(tree(Stage::L).query(context(Stage::L, s, in, l))[1]);
    z += p.back();
  }
  for (double& x : p) x /= z;
  return p;
}

std::array<double, 3> JointModel::corr_probs(const TurnState& s, const TurnInput& in,
                                             int license) const {
  const auto& q = tree(Stage::C).query(context(Stage::C, s, in, license));
  std::array<double, 3> p{q[0], q[1], license == s.window_next() ? q[2] : 0.0};
  normalize(p);
  return p;
}

std::vector<double> JointModel::pos_probs(const TurnState& s, const TurnInput& in) const {
  std::vector<double> p(static_cast<std::size_t>(tagset_.num_real()), 0.0);
  const Corr c = s.corr();
  if (c == Corr::Replace) {
    p[static_cast<std::size_t>(s.token_tag(s.license()))] = 1.0;
    return p;
  }
  const auto& q = tree(Stage::P).query(context(Stage::P, s, in));
  const std::size_t same = pos_outcomes_.size();
  double z = 0.0;
  for (std::size_t k = 0; k < same; ++k) {
    p[static_cast<std::size_t>(pos_outcomes_[k])] = q[k];
    z += q[k];
  }
  if (c == Corr::Match) {
    p[static_cast<std::size_t>(s.token_tag(s.license()))] += q[same];
    z += q[same];
  }
  for (double& x : p) x /= z;
  return p;
}

double JointModel::word_prob(const TurnState& s, const TurnInput& in, TagId tag) const {
  const int i = s.position();
  const auto k = static_cast<std::size_t>(i);
  if (tagset_.info(tag).is_fragment != (in.fragment[k] != 0)) return 0.0;
  auto it = word_trees_.find(tag);
  if (it == word_trees_.end()) return 0.0;
  const auto& q = it->second.query(context(Stage::W, s, in));
  const std::size_t nv = word_vocab_.at(tag).size();
  const std::size_t unk = nv, copy = nv + 1;
  const int w = in.words[k];
  const bool known =
      w >= 0 && (compatible_known_[static_cast<std::size_t>(w)] & (in.fragment[k] ? 2 : 1));
  double p = 0.0;
  if (known) {
    const int idx = word_outcome(tag, w);
    p = idx >= 0 ? q[static_cast<std::size_t>(idx)] : 0.0;
  } else {
    p = q[unk] / config_.unk_divisor;
  }
  if (s.corr() == Corr::Match) {
    if (in.surfaces[static_cast<std::size_t>(s.license())] == in.surfaces[k]) p += q[copy];
    return p;
  }
  return p / (1.0 - q[copy]);
}

std::vector<TagId> JointModel::emitting_tags(const TurnInput& in, int i) const {
  const auto k = static_cast<std::size_t>(i);
  const int w = in.words[k];
  const bool known =
      w >= 0 && (compatible_known_[static_cast<std::size_t>(w)] & (in.fragment[k] ? 2 : 1));
  std::vector<TagId> out;
  for (TagId t : pos_outcomes_) {
    if (tagset_.info(t).is_fragment != (in.fragment[k] != 0)) continue;
    if (known && word_outcome(t, w) < 0) continue;
    out.push_back(t);
  }
  return out;
}

std::vector<double> JointModel::word_dist(const TurnState& s, const TurnInput& in,
                                          TagId tag) const {
  auto it = word_trees_.find(tag);
  if (it == word_trees_.end()) return {};
  const auto& q = it->second.query(context(Stage::W, s, in));
  const auto& vocab = word_vocab_.at(tag);
  const std::size_t nv = vocab.size();
  const auto V = static_cast<std::size_t>(lexicon_.size());
  std::vector<double> p(V + 1, 0.0);
  for (std::size_t k = 0; k < nv; ++k) p[static_cast<std::size_t>(vocab[k])] = q[k];
  p[V] = q[nv];
  const double copy = q[nv + 1];
  if (s.corr() == Corr::Match) {
    // a copy repeats the licensing word, whether or not this tag emits it
    const int lw = in.words[static_cast<std::size_t>(s.license())];
    p[lw >= 0 ? static_cast<std::size_t>(lw) : V] += copy;
  } else {
    for (double& x : p) x /= 1.0 - copy;
  }
  return p;
}

// ---------------------------------------------------------------------------
// scoring gold tags

std::vector<FactorRow> JointModel::factor_rows(const AnnotatedTurn& turn,
                                               const TagSequence& gold) const {
  const TagSequence tags = mask_tags(gold, config_.mask);
  check_tag_invariants(tags);
  const TurnInput in = make_input(turn);
  const int n = turn.size();
  TurnState s(tagset_, n, config_.mask.corrections);
  std::vector<FactorRow> rows;
  auto need = [](double x, const char* what, int i) {
    if (!(x > 0.0))
      throw DataError(std::string("tags have zero probability (") + what + ") at position " +
                      std::to_string(i));
    return x;
  };
  for (int i = 0; i < n; ++i) {
    const auto& g = tags.at[static_cast<std::size_t>(i)];
    FactorRow row;
    row.t = need(tone_probs(s, in)[static_cast<int>(g.tone)], "T", i);
    s.set_tone(g.tone);
    row.e = need(edit_probs(s, in)[static_cast<int>(g.edit)], "E", i);
    s.set_edit(g.edit);
    row.r = need(repair_probs(s, in)[static_cast<int>(g.repair)], "R", i);
    s.set_repair(g.repair);
    if (config_.mask.corrections && g.onset >= 0) {
      const auto cands = onset_candidates(s);
      auto it = std::find(cands.begin(), cands.end(), g.onset);
      if (it == cands.end())
        throw DataError("reparandum onset outside the candidate range at position " +
                        std::to_string(i));
      row.o = onset_probs(s, in, cands)[static_cast<std::size_t>(it - cands.begin())];
      s.set_onset(g.onset);
    }
    if (config_.mask.corrections && s.window_active()) {
      const auto cands = s.license_candidates();
      if (cands.empty()) {
        if (g.corr != Corr::Unmatched || g.license != s.window_next())
          throw DataError("correspondence with no license candidates at position " +
                          std::to_string(i));
        row.l = 1.0;
        row.c = 1.0;
      } else {
        auto it = std::find(cands.begin(), cands.end(), g.license);
        if (it == cands.end()) throw DataError("license outside candidates");
        row.l = license_probs(s, in, cands)[static_cast<std::size_t>(it - cands.begin())];
        const auto cp = corr_probs(s, in, g.license);
        const int ci = g.corr == Corr::Match ? kCorrM : g.corr == Corr::Replace ? kCorrR : kCorrX;
        row.c = need(cp[static_cast<std::size_t>(ci)], "C", i);
      }
      s.set_license(g.license, g.corr);
    }
    const TagId tag = tags.pos[static_cast<std::size_t>(i)];
    row.p = need(pos_probs(s, in)[static_cast<std::size_t>(tag)], "P", i);
    row.w = need(word_prob(s, in, tag), "W", i);
    s.set_word(tag);
    rows.push_back(row);
  }
  FactorRow last;
  last.t = need(tone_probs(s, in)[tags.final_tone ? 1 : 0], "T", n);
  s.set_tone(tags.final_tone ? Tone::T : Tone::Null);
  rows.push_back(last);
  return rows;
}

double JointModel::log_joint_probability(const AnnotatedTurn& turn, const TagSequence& tags) const {
  double lp = 0.0;
  for (const auto& r : factor_rows(turn, tags)) lp += std::log(r.product());
  return lp;
}


// ---------------------------------------------------------------------------
// training

JointModel::Events JointModel::extract_events(const std::vector<const AnnotatedTurn*>& turns) const {
  Events ev;
  auto add = [&](Stage st, Context c, int outcome) {
    ev.stage[static_cast<std::size_t>(st)].push_back(Event{std::move(c), outcome, 1.0});
  };
  for (const AnnotatedTurn* turn : turns) {
    const TagSequence tags = mask_tags(derive_tags(*turn, tagset_), config_.mask);
    const TurnInput in = make_input(*turn);
    const int n = turn->size();
    TurnState s(tagset_, n, config_.mask.corrections);
    for (int i = 0; i <= n; ++i) {
      if (i == n) {
        if (config_.mask.tones) add(Stage::T, context(Stage::T, s, in), tags.final_tone ? 1 : 0);
        break;
      }
      const auto& g = tags.at[static_cast<std::size_t>(i)];
      if (config_.mask.tones && i > 0)
        add(Stage::T, context(Stage::T, s, in), static_cast<int>(g.tone));
      s.set_tone(g.tone);
      if (config_.mask.repairs && (s.in_editing_term() || i > 0))
        add(Stage::E, context(Stage::E, s, in), static_cast<int>(g.edit));
      s.set_edit(g.edit);
      if (config_.mask.repairs && g.edit != Edit::Push && g.edit != Edit::ET && mc_admissible(s))
        add(Stage::R, context(Stage::R, s, in), static_cast<int>(g.repair));
      s.set_repair(g.repair);
      if (config_.mask.corrections && g.onset >= 0) {
        const auto cands = onset_candidates(s);
        if (cands.size() >= 2 && std::find(cands.begin(), cands.end(), g.onset) != cands.end())
          for (int o : cands) add(Stage::O, context(Stage::O, s, in, o), o == g.onset ? 1 : 0);
        s.set_onset(g.onset);
      }
      if (config_.mask.corrections && s.window_active() && g.corr != Corr::None) {
        const auto cands = s.license_candidates();
        if (cands.size() >= 2)
          for (int l : cands) add(Stage::L, context(Stage::L, s, in, l), l == g.license ? 1 : 0);
        if (!cands.empty()) {
          const int ci = g.corr == Corr::Match ? kCorrM : g.corr == Corr::Replace ? kCorrR : kCorrX;
          add(Stage::C, context(Stage::C, s, in, g.license), ci);
        }
        s.set_license(g.license, g.corr);
      }
      const TagId tag = tags.pos[static_cast<std::size_t>(i)];
      if (s.corr() != Corr::Replace) {
        const Context pc = context(Stage::P, s, in);
        if (s.corr() == Corr::Match && s.token_tag(s.license()) == tag)
          add(Stage::P, pc, static_cast<int>(pos_outcomes_.size()));
        else if (pos_index_[static_cast<std::size_t>(tag)] >= 0)
          add(Stage::P, pc, pos_index_[static_cast<std::size_t>(tag)]);
      }
      auto vit = word_vocab_.find(tag);
      if (vit != word_vocab_.end()) {
        const std::size_t nv = vit->second.size();
        int outcome;
        const auto k = static_cast<std::size_t>(i);
        if (s.corr() == Corr::Match &&
            in.surfaces[static_cast<std::size_t>(s.license())] == in.surfaces[k])
          outcome = static_cast<int>(nv + 1);
        else if (in.words[k] >= 0 && word_outcome(tag, in.words[k]) >= 0)
          outcome = word_outcome(tag, in.words[k]);
        else
          outcome = static_cast<int>(nv);
        ev.word[tag].push_back(Event{context(Stage::W, s, in), outcome, 1.0});
      }
      s.set_word(tag);
    }
  }
  return ev;
}

namespace {

ProbTree fit_tree(const std::vector<Event>& growth, const std::vector<Event>& heldout,
                  const ContextSchema& schema, int num_outcomes, const TreeParams& params) {
  ProbTree t = growth.empty() ? ProbTree::uniform(schema, num_outcomes)
                              : ProbTree::grow(growth, schema, num_outcomes, params);
  t.smooth(heldout);
  return t;
}

}  // namespace

JointModel JointModel::train(const std::vector<const AnnotatedTurn*>& growth,
                             const std::vector<const AnnotatedTurn*>& heldout,
                             const Tagset& tagset, const ModelConfig& config) {
  config.validate();
  if (growth.empty()) throw DataError("no training turns");
  JointModel m;
  m.config_ = config;
  m.tagset_ = tagset;
  m.lexicon_ = build_lexicon(growth, config.vocab_min_count);

  std::vector<TagSequence> growth_tags;
  for (const auto* t : growth) growth_tags.push_back(derive_tags(*t, tagset));
  m.clusters_ = build_trees(growth, growth_tags, tagset, m.lexicon_, config.mask);

  std::set<TagId> seen;
  std::map<TagId, std::set<int>> vocab;
  for (std::size_t t = 0; t < growth.size(); ++t)
    for (std::size_t k = 0; k < growth[t]->tokens.size(); ++k) {
      const TagId tag = growth_tags[t].pos[k];
      seen.insert(tag);
      auto& v = vocab[tag];
      const int w = m.lexicon_.id(growth[t]->tokens[k].surface);
      if (w >= 0) v.insert(w);
    }
  m.pos_outcomes_.assign(seen.begin(), seen.end());
  for (auto& [tag, ids] : vocab) m.word_vocab_[tag].assign(ids.begin(), ids.end());
  m.rebuild_tables();

  m.silence_ = SilenceModel(config.silence_edges);
  if (config.silences) {
    std::vector<const AnnotatedTurn*> all = growth;
    all.insert(all.end(), heldout.begin(), heldout.end());
    std::vector<TagSequence> all_tags;
    for (const auto* t : all) all_tags.push_back(mask_tags(derive_tags(*t, tagset), config.mask));
    m.silence_.estimate(all, all_tags);
  }

  const Events eg = m.extract_events(growth);
  const Events eh = m.extract_events(heldout);
  const int outcomes[] = {kNumTone, kNumEdit, kNumRepair, 2, 2, 3,
                          static_cast<int>(m.pos_outcomes_.size()) + 1};
  for (int st = 0; st < kNumStages - 1; ++st) {
    const auto k = static_cast<std::size_t>(st);
    m.trees_[k] = fit_tree(eg.stage[k], eh.stage[k], schema(static_cast<Stage>(st)), outcomes[st],
                           config.tree);
  }
  static const std::vector<Event> none;
  for (const auto& [tag, ids] : m.word_vocab_) {
    auto g = eg.word.find(tag);
    auto h = eh.word.find(tag);
    m.word_trees_[tag] = fit_tree(g == eg.word.end() ? none : g->second,
                                  h == eh.word.end() ? none : h->second, schema(Stage::W),
                                  static_cast<int>(ids.size()) + 2, config.tree);
  }
  return m;
}

JointModel JointModel::train(const Corpus& corpus, const ModelConfig& config) {
  config.validate();
  if (corpus.num_words() == 0) throw DataError("training corpus has no words");
  const auto held = heldout_dialogs(corpus.dialogs.size(), config.heldout_fraction, config.seed);
  std::vector<const AnnotatedTurn*> growth, heldout;
  std::size_t h = 0;
  for (std::size_t d = 0; d < corpus.dialogs.size(); ++d) {
    const bool is_held = h < held.size() && held[h] == d;
    if (is_held) ++h;
    for (const auto& t : corpus.dialogs[d].turns)
      if (!t.tokens.empty()) (is_held ? heldout : growth).push_back(&t);
  }
  return train(growth, heldout, corpus.tagset, config);
}

bool JointModel::operator==(const JointModel& o) const {
  return config_ == o.config_ && tagset_ == o.tagset_ && lexicon_ == o.lexicon_ &&
         clusters_ == o.clusters_ && silence_ == o.silence_ && trees_ == o.trees_ &&
         word_trees_ == o.word_trees_ && pos_outcomes_ == o.pos_outcomes_ &&
         word_vocab_ == o.word_vocab_;
}

}  // namespace dlm
