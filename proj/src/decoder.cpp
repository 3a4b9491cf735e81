// src/decoder.cpp
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

#include "dialoglm/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "dialoglm/error.hpp"

namespace dlm {

namespace {

using TagFn = std::function<void(TurnState&&, const PositionTags&, double)>;

void expand_license(const JointModel& m, const TurnInput& in, TurnState&& s, PositionTags t,
                    double lf, const TagFn& f) {
  if (!m.config().mask.corrections || !s.window_active()) {
    f(std::move(s), t, lf);
    return;
  }
  const auto cands = s.license_candidates();
  if (cands.empty()) {
    t.license = s.window_next();
    t.corr = Corr::Unmatched;
    s.set_license(t.license, t.corr);
    f(std::move(s), t, lf);
    return;
  }
  const auto lp = m.license_probs(s, in, cands);
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (!(lp[k] > 0.0)) continue;
    const auto cp = m.corr_probs(s, in, cands[k]);
    static const Corr kinds[] = {Corr::Match, Corr::Replace, Corr::Unmatched};
    for (int c = 0; c < 3; ++c) {
      if (!(cp[static_cast<std::size_t>(c)] > 0.0)) continue;
      TurnState s2 = s;
      PositionTags t2 = t;
      t2.license = cands[k];
      t2.corr = kinds[c];
      s2.set_license(t2.license, t2.corr);
      f(std::move(s2), t2, lf + std::log(lp[k]) + std::log(cp[static_cast<std::size_t>(c)]));
    }
  }
}

/// T through C for the word at s.position().
void expand_tags(const JointModel& m, const TurnInput& in, const TurnState& s, const TagFn& f) {
  const bool corrections = m.config().mask.corrections;
  const auto tp = m.tone_probs(s, in);
  for (int t = 0; t < kNumTone; ++t) {
    if (!(tp[static_cast<std::size_t>(t)] > 0.0)) continue;
    TurnState s1 = s;
    s1.set_tone(static_cast<Tone>(t));
    const double l1 = std::log(tp[static_cast<std::size_t>(t)]);
    const auto ep = m.edit_probs(s1, in);
    for (int e = 0; e < kNumEdit; ++e) {
      if (!(ep[static_cast<std::size_t>(e)] > 0.0)) continue;
      TurnState s2 = s1;
      s2.set_edit(static_cast<Edit>(e));
      const double l2 = l1 + std::log(ep[static_cast<std::size_t>(e)]);
      const auto rp = m.repair_probs(s2, in);
      for (int r = 0; r < kNumRepair; ++r) {
        if (!(rp[static_cast<std::size_t>(r)] > 0.0)) continue;
        TurnState s3 = s2;
        const auto rt = static_cast<RepairTag>(r);
        s3.set_repair(rt);
        const double l3 = l2 + std::log(rp[static_cast<std::size_t>(r)]);
        PositionTags tags;
        tags.tone = static_cast<Tone>(t);
        tags.edit = static_cast<Edit>(e);
        tags.repair = rt;
        if (corrections && (rt == RepairTag::Mod || rt == RepairTag::Can)) {
          const auto cands = m.onset_candidates(s3);
          const auto op = m.onset_probs(s3, in, cands);
          for (std::size_t k = 0; k < cands.size(); ++k) {
            if (!(op[k] > 0.0)) continue;
            TurnState s4 = s3;
            s4.set_onset(cands[k]);
            PositionTags t4 = tags;
            t4.onset = cands[k];
            expand_license(m, in, std::move(s4), t4, l3 + std::log(op[k]), f);
          }
        } else {
          expand_license(m, in, std::move(s3), tags, l3, f);
        }
      }
    }
  }
}

}  // namespace

void expand(const JointModel& m, const TurnInput& in, const TurnState& state,
            const std::function<void(Extension&&)>& f) {
  const int i = state.position();
  const auto k = static_cast<std::size_t>(i);
  const std::vector<TagId> emitters = m.emitting_tags(in, i);
  expand_tags(m, in, state, [&](TurnState&& s, const PositionTags& tags, double lf) {
    const auto pp = m.pos_probs(s, in);
    std::vector<TagId> cand;
    if (s.corr() == Corr::Replace) {
      cand.push_back(s.token_tag(s.license()));
    } else {
      cand = emitters;
      if (s.corr() == Corr::Match &&
          in.surfaces[static_cast<std::size_t>(s.license())] == in.surfaces[k]) {
        const TagId tl = s.token_tag(s.license());
        if (!std::binary_search(cand.begin(), cand.end(), tl))
          cand.insert(std::lower_bound(cand.begin(), cand.end(), tl), tl);
      }
    }
    for (TagId tag : cand) {
      const double p = pp[static_cast<std::size_t>(tag)];
      if (!(p > 0.0)) continue;
      const double w = m.word_prob(s, in, tag);
      if (!(w > 0.0)) continue;
      Extension x;
      x.state = s;
      x.state.set_word(tag);
      x.tags = tags;
      x.pos = tag;
      x.log_factor = lf + std::log(p) + std::log(w);
      f(std::move(x));
    }
  });
}

namespace {

struct Hyp {
  TurnState state;
  double score = 0.0;
  std::vector<PositionTags> tags;
  std::vector<TagId> pos;
  std::vector<double> factors;  // per-position log factors
};

// Deterministic order on equal scores.
bool key_less(const std::vector<PositionTags>& a, const std::vector<TagId>& ap,
              const std::vector<PositionTags>& b, const std::vector<TagId>& bp) {
  for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) {
    const auto& x = a[k];
    const auto& y = b[k];
    auto tx = std::make_tuple(x.tone, x.edit, x.repair, x.onset, x.license, x.corr, ap[k]);
    auto ty = std::make_tuple(y.tone, y.edit, y.repair, y.onset, y.license, y.corr, bp[k]);
    if (tx != ty) return tx < ty;
  }
  return a.size() < b.size();
}

bool better(const Hyp& a, const Hyp& b) {
  if (a.score != b.score) return a.score > b.score;
  return key_less(a.tags, a.pos, b.tags, b.pos);
}

double log_sum_exp(double a, double b) {
  if (a == -kInfinity) return b;
  if (b == -kInfinity) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

enum class Combine { Max, Sum };

std::vector<Hyp> step(const JointModel& m, const TurnInput& in, const std::vector<Hyp>& beam,
                      Combine mode, double floor, double margin) {
  std::vector<Hyp> next;
  // state hash -> indices into next
  std::unordered_map<std::size_t, std::vector<std::size_t>> index;
  double best = -kInfinity;
  for (const Hyp& h : beam) {
    expand(m, in, h.state, [&](Extension&& x) {
      const double sc = h.score + x.log_factor;
      if (sc < floor) return;
      // in max mode anything this far below the running best is pruned
      // later anyway
      if (mode == Combine::Max) {
        if (sc < best - margin) return;
        best = std::max(best, sc);
      }
      auto& bucket = index[x.state.hash()];
      auto it = std::find_if(bucket.begin(), bucket.end(),
                             [&](std::size_t k) { return next[k].state == x.state; });
      if (it == bucket.end()) {
        Hyp n;
        n.score = sc;
        if (mode == Combine::Max) {
          n.tags = h.tags;
          n.tags.push_back(x.tags);
          n.pos = h.pos;
          n.pos.push_back(x.pos);
          n.factors = h.factors;
          n.factors.push_back(x.log_factor);
        }
        n.state = std::move(x.state);
        bucket.push_back(next.size());
        next.push_back(std::move(n));
        return;
      }
      Hyp& e = next[*it];
      if (mode == Combine::Sum) {
        e.score = log_sum_exp(e.score, sc);
        return;
      }
      if (sc < e.score) return;
      Hyp c;
      c.score = sc;
      c.tags = h.tags;
      c.tags.push_back(x.tags);
      c.pos = h.pos;
      c.pos.push_back(x.pos);
      if (!better(c, e)) return;
      c.factors = h.factors;
      c.factors.push_back(x.log_factor);
      c.state = std::move(e.state);
      e = std::move(c);
    });
  }
  return next;
}

void prune(std::vector<Hyp>& hyps, const BeamOptions& opts) {
  std::sort(hyps.begin(), hyps.end(), better);
  if (hyps.empty()) return;
  if (opts.margin != kInfinity) {
    const double cut = hyps.front().score - opts.margin;
    auto it = std::find_if(hyps.begin(), hyps.end(), [&](const Hyp& h) { return h.score < cut; });
    hyps.erase(it, hyps.end());
  }
  if (opts.width > 0 && hyps.size() > static_cast<std::size_t>(opts.width))
    hyps.resize(static_cast<std::size_t>(opts.width));
}

// Max-mode search over a whole turn; returns the best complete hypothesis
// (score -inf if none).
Hyp search(const JointModel& m, const TurnInput& in, const BeamOptions& opts, double floor) {
  const Tagset& ts = m.tagset();
  std::vector<Hyp> beam(1);
  beam[0].state = TurnState(ts, in.size(), m.config().mask.corrections);
  for (int i = 0; i < in.size(); ++i) {
    beam = step(m, in, beam, Combine::Max, floor, opts.margin);
    prune(beam, opts);
    if (beam.empty()) break;
  }
  Hyp best;
  best.score = -kInfinity;
  bool found = false;
  for (Hyp& h : beam) {
    if (h.state.in_editing_term()) continue;
    const auto tp = m.tone_probs(h.state, in);
    for (int t = 0; t < kNumTone; ++t) {
      if (!(tp[static_cast<std::size_t>(t)] > 0.0)) continue;
      Hyp c;
      c.score = h.score + std::log(tp[static_cast<std::size_t>(t)]);
      c.tags = h.tags;
      c.tags.push_back(PositionTags{static_cast<Tone>(t)});
      c.pos = h.pos;
      c.pos.push_back(-1);
      if (found && !better(c, best)) continue;
      c.factors = h.factors;
      if (!c.factors.empty()) c.factors.back() += std::log(tp[static_cast<std::size_t>(t)]);
      best = std::move(c);
      found = true;
    }
  }
  return best;
}

DecodeResult to_result(const Hyp& h) {
  DecodeResult r;
  r.log_prob = h.score;
  if (h.tags.empty()) return r;
  r.tags.at.assign(h.tags.begin(), h.tags.end() - 1);
  r.tags.final_tone = h.tags.back().tone == Tone::T;
  r.tags.pos.assign(h.pos.begin(), h.pos.end() - 1);
  return r;
}

}  // namespace

DecodeResult decode(const JointModel& m, const TurnInput& in, const BeamOptions& opts) {
  double floor = -kInfinity;
  if (opts.unbounded()) {
    // A complete interpretation's score bounds the optimum from below, and
    // factors never exceed 1, so lower-scoring prefixes cannot win.
    floor = search(m, in, BeamOptions{1, kInfinity}, -kInfinity).score;
  }
  const Hyp best = search(m, in, opts, floor);
  if (best.score == -kInfinity)
    throw DataError("no complete interpretation survived the beam");
  return to_result(best);
}

namespace {

struct Dfs {
  Dfs(const JointModel& model, const TurnInput& input) : m(model), in(input) {
    best.score = -kInfinity;
  }

  const JointModel& m;
  const TurnInput& in;
  bool prune = true;
  Hyp best;
  bool found = false;
  std::size_t count = 0;
  Hyp cur;

  void run(const TurnState& s) {
    if (s.position() == in.size()) {
      if (s.in_editing_term()) return;
      const auto tp = m.tone_probs(s, in);
      for (int t = 0; t < kNumTone; ++t) {
        if (!(tp[static_cast<std::size_t>(t)] > 0.0)) continue;
        ++count;
        if (!prune) continue;
        Hyp c;
        c.score = cur.score + std::log(tp[static_cast<std::size_t>(t)]);
        c.tags = cur.tags;
        c.tags.push_back(PositionTags{static_cast<Tone>(t)});
        c.pos = cur.pos;
        c.pos.push_back(-1);
        if (!found || better(c, best)) {
          best = std::move(c);
          found = true;
        }
      }
      return;
    }
    std::vector<Extension> kids;
    expand(m, in, s, [&](Extension&& x) { kids.push_back(std::move(x)); });
    std::stable_sort(kids.begin(), kids.end(),
                     [](const Extension& a, const Extension& b) { return a.log_factor > b.log_factor; });
    for (auto& x : kids) {
      const double sc = cur.score + x.log_factor;
      if (prune && found && sc < best.score) continue;
      const double saved = cur.score;
      cur.score = sc;
      cur.tags.push_back(x.tags);
      cur.pos.push_back(x.pos);
      run(x.state);
      cur.tags.pop_back();
      cur.pos.pop_back();
      cur.score = saved;
    }
  }
};

}  // namespace

DecodeResult exhaustive(const JointModel& m, const TurnInput& in) {
  if (in.size() > 8) throw UsageError("exhaustive search is limited to turns of 8 words");
  Dfs d(m, in);
  d.run(TurnState(m.tagset(), in.size(), m.config().mask.corrections));
  if (!d.found) throw DataError("turn has no interpretation with nonzero probability");
  return to_result(d.best);
}

std::size_t count_interpretations(const JointModel& m, const TurnInput& in) {
  if (in.size() > 8) throw UsageError("exhaustive search is limited to turns of 8 words");
  Dfs d(m, in);
  d.prune = false;
  d.run(TurnState(m.tagset(), in.size(), m.config().mask.corrections));
  return d.count;
}

namespace {

double total(const std::vector<Hyp>& hyps) {
  double z = -kInfinity;
  for (const auto& h : hyps) z = log_sum_exp(z, h.score);
  return z;
}

// Marginal beam advanced over words [0, upto).
std::vector<Hyp> marginal_beam(const JointModel& m, const TurnInput& in, int upto,
                               const BeamOptions& opts, std::vector<double>* log2p) {
  std::vector<Hyp> beam(1);
  beam[0].state = TurnState(m.tagset(), in.size(), m.config().mask.corrections);
  for (int i = 0; i < upto; ++i) {
    const double before = total(beam);
    beam = step(m, in, beam, Combine::Sum, -kInfinity, kInfinity);
    if (beam.empty())
      throw DataError("word " + std::to_string(i) + " ('" +
                      in.surfaces[static_cast<std::size_t>(i)] + "') has zero probability");
    if (log2p) log2p->push_back((total(beam) - before) / std::log(2.0));
    prune(beam, opts);
  }
  return beam;
}

}  // namespace

std::vector<double> word_log2_probs(const JointModel& m, const TurnInput& in,
                                    const BeamOptions& opts, PerplexityMode mode) {
  std::vector<double> out;
  if (mode == PerplexityMode::Marginal) {
    marginal_beam(m, in, in.size(), opts, &out);
    return out;
  }
  const Hyp best = search(m, in, opts, -kInfinity);
  if (best.score == -kInfinity) throw DataError("no complete interpretation survived the beam");
  for (double f : best.factors) out.push_back(f / std::log(2.0));
  return out;
}

double PerplexityResult::perplexity() const {
  if (words == 0) throw DataError("perplexity of an empty test set");
  return std::exp2(-log2_sum / static_cast<double>(words));
}

PerplexityResult word_perplexity(const JointModel& m, const std::vector<const AnnotatedTurn*>& turns,
                                 const BeamOptions& opts, PerplexityMode mode) {
  PerplexityResult r;
  for (const auto* t : turns) {
    if (t->tokens.empty()) continue;
    for (double x : word_log2_probs(m, m.make_input(*t), opts, mode)) r.log2_sum += x;
    r.words += t->tokens.size();
  }
  if (r.words == 0) throw DataError("perplexity of an empty test set");
  return r;
}

std::vector<double> next_word_distribution(const JointModel& m, const TurnInput& in, int i,
                                           const BeamOptions& opts) {
  if (i < 0 || i >= in.size()) throw UsageError("word position out of range");
  const std::vector<Hyp> beam = marginal_beam(m, in, i, opts, nullptr);
  const double z = total(beam);
  const auto V = static_cast<std::size_t>(m.lexicon().size());
  std::vector<double> dist(V + 1, 0.0);
  for (const Hyp& h : beam) {
    const double post = std::exp(h.score - z);
    expand_tags(m, in, h.state, [&](TurnState&& s, const PositionTags&, double lf) {
      const double w_ext = post * std::exp(lf);
      const auto pp = m.pos_probs(s, in);
      for (std::size_t t = 0; t < pp.size(); ++t) {
        if (!(pp[t] > 0.0)) continue;
        const auto tag = static_cast<TagId>(t);
        const auto wd = m.word_dist(s, in, tag);
        for (std::size_t k = 0; k < wd.size(); ++k) dist[k] += w_ext * pp[t] * wd[k];
      }
    });
  }
  return dist;
}

}  // namespace dlm
