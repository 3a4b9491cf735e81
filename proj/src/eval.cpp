// src/eval.cpp
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

#include "dialoglm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "dialoglm/error.hpp"
#include "json.hpp"

namespace dlm {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Tone: return "tones";
    case EventKind::TurnInternalTone: return "turn_internal_tones";
    case EventKind::RepairDetection: return "repair_detection";
    case EventKind::RepairCorrection: return "repair_correction";
    case EventKind::DiscourseMarker: return "discourse_markers";
  }
  return "?";
}

EventCounts count_events(const EventSet& gold, const EventSet& predicted) {
  if (gold.kind != predicted.kind) throw UsageError("comparing events of different kinds");
  EventCounts c;
  c.gold = gold.ids.size();
  c.predicted = predicted.ids.size();
  for (const auto& id : predicted.ids) c.correct += gold.ids.count(id);
  return c;
}

Prf EventCounts::metrics() const {
  Prf m;
  if (gold > 0) m.recall = static_cast<double>(correct) / static_cast<double>(gold);
  if (predicted > 0) m.precision = static_cast<double>(correct) / static_cast<double>(predicted);
  const std::size_t wrong = (gold - correct) + (predicted - correct);
  if (gold > 0) m.error_rate = static_cast<double>(wrong) / static_cast<double>(gold);
  else if (predicted > 0) m.error_rate = kInfinity;
  return m;
}

EventCounts& EventCounts::operator+=(const EventCounts& o) {
  gold += o.gold;
  predicted += o.predicted;
  correct += o.correct;
  return *this;
}

Prf prf(const EventSet& gold, const EventSet& predicted) {
  return count_events(gold, predicted).metrics();
}

std::vector<RepairSite> repair_sites(const TagSequence& tags) {
  std::vector<RepairSite> out;
  int push = -1;
  for (int i = 0; i < tags.size(); ++i) {
    const auto& p = tags.at[static_cast<std::size_t>(i)];
    if (p.edit == Edit::Push) push = i;
    if (p.repair != RepairTag::Null) {
      RepairSite s;
      s.ip = p.edit == Edit::Pop && push >= 0 ? push : i;
      s.kind = p.repair;
      s.onset = p.repair == RepairTag::Abr ? s.ip : p.onset;
      out.push_back(s);
    }
    if (p.edit == Edit::Pop) push = -1;
  }
  return out;
}

void add_turn_events(EventSet& set, int turn_index, const TagSequence& tags, const Tagset& tagset) {
  const int n = tags.size();
  switch (set.kind) {
    case EventKind::Tone:
    case EventKind::TurnInternalTone:
      for (int p = 1; p < n; ++p)
        if (tags.at[static_cast<std::size_t>(p)].tone == Tone::T) set.ids.insert({turn_index, p});
      if (set.kind == EventKind::Tone && n > 0 && tags.final_tone) set.ids.insert({turn_index, n});
      break;
    case EventKind::RepairDetection:
      for (const auto& s : repair_sites(tags)) set.ids.insert({turn_index, s.ip});
      break;
    case EventKind::RepairCorrection:
      // a repair whose reparandum was not recovered cannot be a correction
      for (const auto& s : repair_sites(tags))
        if (s.onset >= 0) set.ids.insert({turn_index, s.ip, s.onset});
      break;
    case EventKind::DiscourseMarker:
      for (int i = 0; i < n && i < static_cast<int>(tags.pos.size()); ++i) {
        const TagId t = tags.pos[static_cast<std::size_t>(i)];
        if (t >= 0 && tagset.info(t).is_discourse_marker) set.ids.insert({turn_index, i});
      }
      break;
  }
}

EventSet turn_events(EventKind kind, int turn_index, const TagSequence& tags, const Tagset& tagset) {
  EventSet s;
  s.kind = kind;
  add_turn_events(s, turn_index, tags, tagset);
  return s;
}

double pos_error_rate(const std::vector<TagId>& gold, const std::vector<TagId>& predicted,
                      const Tagset& tagset) {
  if (gold.size() != predicted.size()) throw DataError("POS sequences differ in length");
  std::size_t words = 0, wrong = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= 0 && tagset.info(gold[i]).is_pseudo) continue;
    ++words;
    wrong += gold[i] != predicted[i];
  }
  return words == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(words);
}

double EvalCounts::pos_error_rate() const {
  return words == 0 ? 0.0 : static_cast<double>(pos_errors) / static_cast<double>(words);
}

EvalCounts& EvalCounts::operator+=(const EvalCounts& o) {
  turns += o.turns;
  words += o.words;
  for (std::size_t k = 0; k < events.size(); ++k) events[k] += o.events[k];
  pos_errors += o.pos_errors;
  perplexity.add(o.perplexity);
  best_path.add(o.best_path);
  trigram.add(o.trigram);
  return *this;
}

EvalCounts evaluate(const JointModel& model, const NgramModel* baseline,
                    const std::vector<const AnnotatedTurn*>& turns, const BeamOptions& beam) {
  // gold POS names may include tags the model never saw
  std::set<std::string> names;
  for (const auto* t : turns)
    for (const auto& tok : t->tokens) names.insert(tok.pos);
  const Tagset gold_tagset(names);
  const Tagset& model_tagset = model.tagset();

  std::array<EventSet, kNumEventKinds> gold, pred;
  for (int k = 0; k < kNumEventKinds; ++k) gold[k].kind = pred[k].kind = static_cast<EventKind>(k);

  EvalCounts c;
  int index = 0;
  for (const auto* t : turns) {
    if (t->tokens.empty()) continue;
    const TagSequence g = derive_tags(*t, gold_tagset);
    const TurnInput in = model.make_input(*t);
    const DecodeResult d = decode(model, in, beam);
    if (!(d.log_prob > -kInfinity)) throw DataError("no interpretation of turn " + t->utterance_id);
    for (int k = 0; k < kNumEventKinds; ++k) {
      add_turn_events(gold[k], index, g, gold_tagset);
      add_turn_events(pred[k], index, d.tags, model_tagset);
    }
    for (int i = 0; i < t->size(); ++i)
      if (gold_tagset.name(g.pos[static_cast<std::size_t>(i)]) !=
          model_tagset.name(d.tags.pos[static_cast<std::size_t>(i)]))
        ++c.pos_errors;

    const auto n = static_cast<std::size_t>(t->size());
    c.best_path.log2_sum += d.log_prob / std::numbers::ln2;
    c.best_path.words += n;
    for (double x : word_log2_probs(model, in, beam, PerplexityMode::Marginal))
      c.perplexity.log2_sum += x;
    c.perplexity.words += n;
    if (baseline) {
      for (double x : baseline->word_log2_probs(*t)) c.trigram.log2_sum += x;
      c.trigram.words += n;
    }
    ++c.turns;
    c.words += n;
    ++index;
  }
  for (int k = 0; k < kNumEventKinds; ++k) c.events[k] = count_events(gold[k], pred[k]);
  return c;
}

std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t num_dialogs, int k) {
  if (k < 2) throw UsageError("cross-validation needs at least 2 folds");
  const auto K = static_cast<std::size_t>(k);
  if (num_dialogs < K)
    throw DataError("corpus has " + std::to_string(num_dialogs) + " dialogs, fewer than " +
                    std::to_string(k) + " folds");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t f = 0; f < K; ++f) out.emplace_back(f * num_dialogs / K, (f + 1) * num_dialogs / K);
  return out;
}

MetricsReport cross_validate(const Corpus& corpus, int k, const ModelConfig& config,
                             const BeamOptions& beam, const NgramConfig& baseline) {
  config.validate();
  MetricsReport r;
  r.config = config;
  r.beam = beam;
  r.baseline = baseline;
  for (const auto& [lo, hi] : fold_ranges(corpus.dialogs.size(), k)) {
    std::vector<Dialog> train;
    std::vector<const AnnotatedTurn*> test;
    FoldReport fold;
    for (std::size_t d = 0; d < corpus.dialogs.size(); ++d) {
      if (d >= lo && d < hi) {
        fold.dialogs.push_back(corpus.dialogs[d].id);
        for (const auto& t : corpus.dialogs[d].turns) test.push_back(&t);
      } else {
        train.push_back(corpus.dialogs[d]);
      }
    }
    const Corpus train_corpus = make_corpus(std::move(train));
    const JointModel model = JointModel::train(train_corpus, config);
    const NgramModel ngram = NgramModel::train(train_corpus, baseline);
    fold.counts = evaluate(model, &ngram, test, beam);
    r.total += fold.counts;
    r.folds.push_back(std::move(fold));
  }
  return r;
}

namespace {

using Json = nlohmann::ordered_json;

Json number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json perplexity_json(const PerplexityResult& p) {
  Json j;
  j["log2_sum"] = p.log2_sum;
  j["words"] = p.words;
  j["perplexity"] = p.words > 0 ? Json(p.perplexity()) : Json(nullptr);
  return j;
}

Json counts_json(const EvalCounts& c) {
  Json j;
  j["turns"] = c.turns;
  j["words"] = c.words;
  Json pos;
  pos["errors"] = c.pos_errors;
  pos["error_rate"] = c.pos_error_rate();
  j["pos"] = pos;
  Json ev;
  for (int k = 0; k < kNumEventKinds; ++k) {
    const auto& e = c.events[static_cast<std::size_t>(k)];
    const Prf m = e.metrics();
    Json x;
    x["gold"] = e.gold;
    x["predicted"] = e.predicted;
    x["correct"] = e.correct;
    x["recall"] = number(m.recall);
    x["precision"] = number(m.precision);
    x["error_rate"] = number(m.error_rate);
    ev[event_kind_name(static_cast<EventKind>(k))] = x;
  }
  j["events"] = ev;
  Json pp;
  pp["joint"] = perplexity_json(c.perplexity);
  pp["best_path"] = perplexity_json(c.best_path);
  pp["trigram"] = perplexity_json(c.trigram);
  j["perplexity"] = pp;
  return j;
}

Json config_json(const ModelConfig& c) {
  Json j;
  j["tones"] = c.mask.tones;
  j["repairs"] = c.mask.repairs;
  j["corrections"] = c.mask.corrections;
  j["silences"] = c.silences;
  j["heldout_fraction"] = c.heldout_fraction;
  j["seed"] = c.seed;
  j["min_leaf"] = c.tree.min_leaf;
  j["max_depth"] = c.tree.max_depth;
  j["silence_edges"] = c.silence_edges;
  j["mod_onset_window"] = c.mod_onset_window;
  j["unk_divisor"] = c.unk_divisor;
  j["vocab_min_count"] = c.vocab_min_count;
  return j;
}

}  // namespace

namespace {

Json report_object(const MetricsReport& r) {
  Json j;
  j["config"] = config_json(r.config);
  Json beam;
  beam["width"] = r.beam.width;
  beam["margin"] = number(r.beam.margin);
  j["beam"] = beam;
  Json base;
  base["gt_cutoff"] = r.baseline.gt_cutoff;
  base["vocab_min_count"] = r.baseline.vocab_min_count;
  j["baseline"] = base;
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    Json x;
    x["dialogs"] = f.dialogs;
    x["counts"] = counts_json(f.counts);
    folds.push_back(x);
  }
  j["folds"] = folds;
  j["total"] = counts_json(r.total);
  return j;
}

}  // namespace

std::string report_json(const MetricsReport& r) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j.update(report_object(r));
  return j.dump(2) + "\n";
}

std::string report_json(const std::vector<std::pair<std::string, const MetricsReport*>>& columns) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  Json cols = Json::array();
  for (const auto& [label, rep] : columns) {
    Json c;
    c["label"] = label;
    c.update(report_object(*rep));
    cols.push_back(c);
  }
  j["columns"] = cols;
  return j.dump(2) + "\n";
}

namespace {

std::string percent(double x) {
  if (std::isinf(x)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string render_table(TableKind kind,
                         const std::vector<std::pair<std::string, const MetricsReport*>>& columns) {
  struct Row {
    std::string label;
    std::vector<std::string> cells;  // empty: section heading
  };
  std::vector<Row> rows;
  auto heading = [&](const std::string& s) { rows.push_back({s, {}}); };
  auto row = [&](const std::string& label, const auto& cell) {
    Row r{label, {}};
    for (const auto& [name, rep] : columns) r.cells.push_back(cell(*rep));
    rows.push_back(std::move(r));
  };
  auto prf_rows = [&](EventKind k, bool needs_corrections) {
    auto cell = [&](auto field) {
      return [=](const MetricsReport& rep) -> std::string {
        if (needs_corrections && !rep.config.mask.corrections) return "";
        return percent(field(rep.total[k].metrics()));
      };
    };
    row("  Recall", cell([](const Prf& m) { return m.recall; }));
    row("  Precision", cell([](const Prf& m) { return m.precision; }));
    row("  Error Rate", cell([](const Prf& m) { return m.error_rate; }));
  };
  switch (kind) {
    case TableKind::Pos:
      heading("POS Tagging");
      row("  Error Rate", [](const MetricsReport& r) { return percent(r.total.pos_error_rate()); });
      heading("Discourse Markers");
      prf_rows(EventKind::DiscourseMarker, false);
      break;
    case TableKind::Tones:
      heading("Within Turn");
      prf_rows(EventKind::TurnInternalTone, false);
      heading("All Tones");
      prf_rows(EventKind::Tone, false);
      break;
    case TableKind::Repairs:
      heading("Detection");
      prf_rows(EventKind::RepairDetection, false);
      heading("Correction");
      prf_rows(EventKind::RepairCorrection, true);
      break;
  }
  row("Perplexity", [](const MetricsReport& r) {
    return r.total.perplexity.words ? fixed2(r.total.perplexity.perplexity()) : std::string();
  });
  row("Trigram Perplexity", [](const MetricsReport& r) {
    return r.total.trigram.words ? fixed2(r.total.trigram.perplexity()) : std::string();
  });

  std::size_t lw = 0;
  for (const auto& r : rows) lw = std::max(lw, r.label.size());
  std::vector<std::size_t> cw;
  for (const auto& [name, rep] : columns) cw.push_back(std::max<std::size_t>(name.size(), 6));
  std::ostringstream out;
  auto pad_left = [&](const std::string& s, std::size_t w) {
    out << std::string(w > s.size() ? w - s.size() : 0, ' ') << s;
  };
  out << std::string(lw, ' ');
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << " | ";
    pad_left(columns[c].first, cw[c]);
  }
  out << '\n';
  for (const auto& r : rows) {
    out << r.label << std::string(lw - r.label.size(), ' ');
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << " | ";
      pad_left(r.cells.empty() ? "" : r.cells[c], cw[c]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::string, ModelConfig>> table_columns(TableKind kind,
                                                               const ModelConfig& base) {
  auto cfg = [&](bool t, bool r, bool c, bool s) {
    ModelConfig m = base;
    m.mask = {t, r, c};
    m.silences = s;
    return m;
  };
  switch (kind) {
    case TableKind::Pos:
      return {{"Base", cfg(false, false, false, false)},
              {"Tones+Repairs+Corrections", cfg(true, true, true, false)},
              {"+Silences", cfg(true, true, true, true)}};
    case TableKind::Tones:
      return {{"Tones", cfg(true, false, false, false)},
              {"Tones+Silences", cfg(true, false, false, true)},
              {"Tones+Repairs+Corrections+Silences", cfg(true, true, true, true)}};
    case TableKind::Repairs:
      return {{"Repairs", cfg(false, true, false, false)},
              {"Repairs+Silences", cfg(false, true, false, true)},
              {"Repairs+Corrections+Silences", cfg(false, true, true, true)},
              {"Tones+Repairs+Corrections+Silences", cfg(true, true, true, true)}};
  }
  return {};
}

}  // namespace dlm
