// src/cli.cpp
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

#include "dialoglm/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dialoglm/artifact.hpp"
#include "dialoglm/clustering.hpp"
#include "dialoglm/config.hpp"
#include "dialoglm/corpus.hpp"
#include "dialoglm/decoder.hpp"
#include "dialoglm/error.hpp"
#include "dialoglm/eval.hpp"
#include "dialoglm/model.hpp"
#include "dialoglm/ngram.hpp"
#include "json.hpp"

namespace dlm {

namespace {

// Options shared by every command that trains or decodes.
struct Settings {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::optional<int> beam;
  std::optional<double> margin;
  bool no_tones = false, no_repairs = false, no_corrections = false, no_silences = false;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "key=value configuration file (default: $DIALOGLM_CONFIG)");
    app->add_option("--set", sets, "override one configuration key, KEY=VALUE");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--beam", beam, "beam width (0: unbounded)");
    app->add_option("--margin", margin, "beam margin in nats (inf: none)");
    app->add_flag("--no-tones", no_tones, "do not model boundary tones");
    app->add_flag("--no-repairs", no_repairs, "do not model speech repairs");
    app->add_flag("--no-corrections", no_corrections, "detect repairs without correcting them");
    app->add_flag("--no-silences", no_silences, "ignore pause durations");
  }

  RunConfig resolve() const {
    std::vector<std::string> o = sets;
    if (seed) o.push_back("seed=" + std::to_string(*seed));
    if (beam) o.push_back("beam_width=" + std::to_string(*beam));
    if (margin) {
      std::ostringstream m;
      m.precision(17);
      m << *margin;
      o.push_back("beam_margin=" + (std::isinf(*margin) ? std::string("inf") : m.str()));
    }
    if (no_tones) o.push_back("enable_tones=false");
    if (no_repairs) o.push_back("enable_repairs=false");
    if (no_corrections) o.push_back("enable_corrections=false");
    if (no_silences) o.push_back("enable_silences=false");
    return load_run_config(config_file, o);
  }
};

std::optional<TableKind> table_kind(const std::string& s) {
  if (s == "pos") return TableKind::Pos;
  if (s == "tones") return TableKind::Tones;
  if (s == "repairs") return TableKind::Repairs;
  if (s == "all" || s.empty()) return std::nullopt;
  throw UsageError("unknown table '" + s + "' (pos, tones, repairs or all)");
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  write_file(path, text);
}

std::vector<const AnnotatedTurn*> all_turns(const Corpus& c) {
  std::vector<const AnnotatedTurn*> out;
  for (const auto& d : c.dialogs)
    for (const auto& t : d.turns) out.push_back(&t);
  return out;
}

void print_summary(const EvalCounts& c, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "turns %zu  words %zu  POS error %.2f%%\n", c.turns, c.words,
                100.0 * c.pos_error_rate());
  out << buf;
  for (int k = 0; k < kNumEventKinds; ++k) {
    const auto& e = c.events[static_cast<std::size_t>(k)];
    const Prf m = e.metrics();
    std::snprintf(buf, sizeof buf, "%-20s gold %5zu  guessed %5zu  recall %6.2f  precision %6.2f  error %7.2f\n",
                  event_kind_name(static_cast<EventKind>(k)), e.gold, e.predicted, 100.0 * m.recall,
                  100.0 * m.precision, 100.0 * m.error_rate);
    out << buf;
  }
  if (c.perplexity.words) out << "perplexity " << c.perplexity.perplexity() << "\n";
  if (c.best_path.words) out << "best-path perplexity " << c.best_path.perplexity() << "\n";
  if (c.trigram.words) out << "trigram perplexity " << c.trigram.perplexity() << "\n";
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const Corpus c = read_corpus_file(path);
  out << "ok: " << c.dialogs.size() << " dialogs, " << c.num_turns() << " turns, " << c.num_words()
      << " words\n";
  return 0;
}

int cmd_stats(const std::string& path, bool json, std::ostream& out) {
  const CorpusStats s = corpus_stats(read_corpus_file(path));
  const std::pair<const char*, std::size_t> rows[] = {
      {"dialogs", s.dialogs},
      {"speakers", s.speakers},
      {"turns", s.turns},
      {"words", s.words},
      {"discourse_markers", s.discourse_markers},
      {"boundary_tones", s.tones},
      {"turn_internal_tones", s.turn_internal_tones},
      {"abridged_repairs", s.abridged_repairs},
      {"modification_repairs", s.modification_repairs},
      {"fresh_starts", s.fresh_starts},
      {"editing_terms", s.editing_terms},
  };
  if (json) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : rows) j[k] = v;
    out << j.dump(2) << "\n";
  } else {
    for (const auto& [k, v] : rows) out << k << ' ' << v << '\n';
  }
  return 0;
}

int cmd_cluster(const RunConfig& cfg, bool dump, std::ostream& out) {
  const Corpus c = read_corpus_file(cfg.corpus);
  const auto turns = all_turns(c);
  std::vector<TagSequence> tags;
  for (const auto* t : turns) tags.push_back(derive_tags(*t, c.tagset));
  const Lexicon lex = build_lexicon(turns, cfg.model_config.vocab_min_count);
  const ClusterSet cs = build_trees(turns, tags, c.tagset, lex, cfg.model_config.mask);
  out << "POS tree: " << cs.pos.num_items() << " tags\n";
  for (const auto& [tag, tree] : cs.words)
    out << "word tree " << c.tagset.name(tag) << ": " << tree.num_items() << " words\n";
  if (dump) {
    out << "\n# POS\n" << cs.pos.dump();
    for (const auto& [tag, tree] : cs.words) out << "\n# " << c.tagset.name(tag) << "\n" << tree.dump();
  }
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  if (cfg.model.empty()) throw UsageError("train needs --model (output path)");
  const Corpus c = read_corpus_file(cfg.corpus);
  const JointModel m = JointModel::train(c, cfg.model_config);
  write_file(cfg.model, encode_artifact(m));
  out << "trained on " << c.num_words() << " words; lexicon " << m.lexicon().size() << ", POS tags "
      << m.pos_outcomes().size() << "; wrote " << cfg.model << "\n";
  return 0;
}

int cmd_decode(const RunConfig& cfg, const std::string& output, const std::string& sidecar,
               std::ostream& out) {
  const JointModel m = decode_joint(read_file(cfg.model));
  Corpus c = read_corpus_file(cfg.corpus);
  std::ostringstream lines;
  for (auto& d : c.dialogs)
    for (auto& t : d.turns) {
      nlohmann::ordered_json j;
      j["dialog"] = d.id;
      j["utterance"] = t.utterance_id;
      j["words"] = t.tokens.size();
      if (t.tokens.empty()) {
        j["log_prob"] = 0.0;
      } else {
        const DecodeResult r = decode(m, m.make_input(t), cfg.beam);
        if (!(r.log_prob > -kInfinity)) throw DataError("no interpretation of turn " + t.utterance_id);
        apply_tags(t, r.tags, m.tagset());
        j["log_prob"] = r.log_prob;
        j["log2_prob"] = r.log_prob / std::numbers::ln2;
      }
      lines << j.dump() << "\n";
    }
  c.refresh();
  write_text(output, serialize_corpus(c), out);
  if (!sidecar.empty()) write_file(sidecar, lines.str());
  return 0;
}

void print_tables(const std::optional<TableKind>& which,
                  const std::vector<std::pair<std::string, const MetricsReport*>>& cols,
                  std::ostream& out) {
  for (TableKind k : {TableKind::Pos, TableKind::Tones, TableKind::Repairs})
    if (!which || *which == k) out << render_table(k, cols) << "\n";
}

int cmd_eval(const RunConfig& cfg, const std::string& baseline_path, const std::string& table,
             std::ostream& out) {
  const auto which = table_kind(table);
  const JointModel m = decode_joint(read_file(cfg.model));
  const Corpus c = read_corpus_file(cfg.corpus);
  std::optional<NgramModel> ngram;
  if (!baseline_path.empty()) ngram = decode_trigram(read_file(baseline_path));
  MetricsReport r;
  r.config = m.config();
  r.beam = cfg.beam;
  if (ngram) r.baseline = ngram->config();
  r.total = evaluate(m, ngram ? &*ngram : nullptr, all_turns(c), cfg.beam);
  print_summary(r.total, out);
  out << "\n";
  print_tables(which, {{"Model", &r}}, out);
  if (!cfg.report.empty()) write_file(cfg.report, report_json(r));
  return 0;
}

int cmd_xval(const RunConfig& cfg, const std::string& table, bool ablations, std::ostream& out) {
  const auto which = table_kind(table);
  const Corpus c = read_corpus_file(cfg.corpus);
  if (!ablations) {
    const MetricsReport r = cross_validate(c, cfg.folds, cfg.model_config, cfg.beam, cfg.baseline);
    print_summary(r.total, out);
    out << "\n";
    print_tables(which, {{"Model", &r}}, out);
    if (!cfg.report.empty()) write_file(cfg.report, report_json(r));
    return 0;
  }
  // one cross-validation per distinct ablation column
  std::vector<std::pair<std::string, ModelConfig>> configs;
  for (TableKind k : {TableKind::Pos, TableKind::Tones, TableKind::Repairs})
    if (!which || *which == k)
      for (auto& col : table_columns(k, cfg.model_config)) {
        bool seen = false;
        for (const auto& [label, mc] : configs) seen = seen || mc == col.second;
        if (!seen) configs.push_back(col);
      }
  std::vector<MetricsReport> reports;
  reports.reserve(configs.size());
  for (const auto& [label, mc] : configs)
    reports.push_back(cross_validate(c, cfg.folds, mc, cfg.beam, cfg.baseline));
  auto find = [&](const ModelConfig& mc) -> const MetricsReport* {
    for (std::size_t i = 0; i < configs.size(); ++i)
      if (configs[i].second == mc) return &reports[i];
    return nullptr;
  };
  for (TableKind k : {TableKind::Pos, TableKind::Tones, TableKind::Repairs}) {
    if (which && *which != k) continue;
    std::vector<std::pair<std::string, const MetricsReport*>> cols;
    for (const auto& [label, mc] : table_columns(k, cfg.model_config)) cols.emplace_back(label, find(mc));
    out << render_table(k, cols) << "\n";
  }
  if (!cfg.report.empty()) {
    std::vector<std::pair<std::string, const MetricsReport*>> cols;
    for (std::size_t i = 0; i < configs.size(); ++i) cols.emplace_back(configs[i].first, &reports[i]);
    write_file(cfg.report, report_json(cols));
  }
  return 0;
}

int cmd_baseline_train(const RunConfig& cfg, std::ostream& out) {
  if (cfg.model.empty()) throw UsageError("baseline train needs --model (output path)");
  const Corpus c = read_corpus_file(cfg.corpus);
  const NgramModel m = NgramModel::train(c, cfg.baseline);
  write_file(cfg.model, encode_artifact(m));
  out << "trigram model over " << m.vocab_size() << " symbols; wrote " << cfg.model << "\n";
  return 0;
}

int cmd_baseline_perplexity(const RunConfig& cfg, std::ostream& out) {
  const NgramModel m = decode_trigram(read_file(cfg.model));
  const Corpus c = read_corpus_file(cfg.corpus);
  const PerplexityResult r = trigram_perplexity(m, all_turns(c));
  out << "words " << r.words << "\nperplexity " << r.perplexity() << "\n";
  return 0;
}

int cmd_inspect(const std::string& path, const std::string& tree, std::ostream& out) {
  const std::string bytes = read_file(path);
  const ArtifactType type = artifact_type(bytes);
  if (type == ArtifactType::Trigram) {
    if (!tree.empty()) throw UsageError("--dump-tree needs a joint model");
    const NgramModel m = decode_trigram(bytes);
    out << "type trigram\nsymbols " << m.vocab_size() << "\ngt_cutoff " << m.config().gt_cutoff
        << "\nvocab_min_count " << m.config().vocab_min_count << "\n";
    return 0;
  }
  const JointModel m = decode_joint(bytes);
  if (!tree.empty()) {
    for (int st = 0; st < kNumStages - 1; ++st)
      if (tree == stage_name(static_cast<Stage>(st))) {
        out << m.tree(static_cast<Stage>(st)).dump(m.outcome_names(static_cast<Stage>(st)));
        return 0;
      }
    if (tree.rfind("W:", 0) == 0) {
      const auto tag = m.tagset().find(tree.substr(2));
      if (tag && m.word_trees().count(*tag)) {
        out << m.word_trees().at(*tag).dump(m.outcome_names(Stage::W, *tag));
        return 0;
      }
      throw DataError("no word tree for tag '" + tree.substr(2) + "'");
    }
    throw UsageError("unknown tree '" + tree + "' (T, E, R, O, L, C, P or W:<tag>)");
  }
  const auto& mc = m.config();
  out << "type joint\n"
      << "tones " << mc.mask.tones << "  repairs " << mc.mask.repairs << "  corrections "
      << mc.mask.corrections << "  silences " << mc.silences << "\n"
      << "tagset " << m.tagset().size() << " (" << m.pos_outcomes().size() << " emitted)\n"
      << "lexicon " << m.lexicon().size() << "\n";
  for (int st = 0; st < kNumStages - 1; ++st) {
    const auto& t = m.tree(static_cast<Stage>(st));
    out << "tree " << stage_name(static_cast<Stage>(st)) << ": " << t.nodes().size() << " nodes, "
        << t.num_leaves() << " leaves, " << t.num_outcomes() << " outcomes\n";
  }
  std::size_t nodes = 0, leaves = 0;
  for (const auto& [tag, t] : m.word_trees()) {
    nodes += t.nodes().size();
    leaves += static_cast<std::size_t>(t.num_leaves());
  }
  out << "word trees: " << m.word_trees().size() << " (" << nodes << " nodes, " << leaves
      << " leaves)\n";
  const auto& s = m.silence();
  out << "silence factors by bin (upper edge):\n";
  for (int b = 0; b < s.num_bins(); ++b) {
    char buf[48];
    if (b < static_cast<int>(s.edges().size())) std::snprintf(buf, sizeof buf, "  <=%.3gs", s.edges()[static_cast<std::size_t>(b)]);
    else std::snprintf(buf, sizeof buf, "  >%.3gs", s.edges().back());
    out << buf;
    for (int k = 0; k < kNumSilenceClasses; ++k) {
      std::snprintf(buf, sizeof buf, " %s=%.3f", silence_class_name(static_cast<SilenceClass>(k)),
                    s.factor_at(static_cast<SilenceClass>(k), b));
      out << buf;
    }
    out << "\n";
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint language model of words, POS tags, boundary tones and speech repairs"};
  app.name("dialoglm");
  app.require_subcommand(1);

  Settings settings;
  std::string corpus_arg, model_arg, report_arg, output, sidecar, baseline, table, tree;
  bool json = false, dump = false, ablations = false;
  std::optional<int> folds;

  auto* validate = app.add_subcommand("validate", "parse and check a corpus file");
  validate->add_option("corpus", corpus_arg, "corpus file")->required();

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("corpus", corpus_arg, "corpus file")->required();
  stats->add_flag("--json", json, "JSON output");

  auto* cluster = app.add_subcommand("cluster", "build the POS and word classification trees");
  cluster->add_option("--corpus", corpus_arg, "corpus file")->required();
  cluster->add_flag("--dump", dump, "print the trees with their bit codes");
  settings.add_to(cluster);

  auto* train = app.add_subcommand("train", "train a joint model");
  train->add_option("--corpus", corpus_arg, "training corpus")->required();
  train->add_option("-o,--model", model_arg, "output model artifact")->required();
  settings.add_to(train);

  auto* dec = app.add_subcommand("decode", "tag a corpus with a trained model");
  dec->add_option("--model", model_arg, "model artifact")->required();
  dec->add_option("--corpus", corpus_arg, "corpus to tag (its tags are ignored)")->required();
  dec->add_option("-o,--output", output, "tagged corpus (default: stdout)");
  dec->add_option("--sidecar", sidecar, "per-turn log probabilities, JSON lines");
  settings.add_to(dec);

  auto* ev = app.add_subcommand("eval", "score a trained model on an annotated corpus");
  ev->add_option("--model", model_arg, "model artifact")->required();
  ev->add_option("--corpus", corpus_arg, "annotated test corpus")->required();
  ev->add_option("--baseline", baseline, "trigram artifact to report alongside");
  ev->add_option("--report", report_arg, "JSON report path");
  ev->add_option("--table", table, "pos, tones, repairs or all");
  settings.add_to(ev);

  auto* xval = app.add_subcommand("xval", "k-fold cross-validation");
  xval->add_option("--corpus", corpus_arg, "annotated corpus")->required();
  xval->add_option("--folds", folds, "number of folds");
  xval->add_option("--report", report_arg, "JSON report path");
  xval->add_option("--table", table, "pos, tones, repairs or all");
  xval->add_flag("--ablations", ablations, "run every column of the selected tables");
  settings.add_to(xval);

  auto* base = app.add_subcommand("baseline", "word trigram backoff model");
  base->require_subcommand(1);
  auto* btrain = base->add_subcommand("train", "train the trigram model");
  btrain->add_option("--corpus", corpus_arg, "training corpus")->required();
  btrain->add_option("-o,--model", model_arg, "output artifact")->required();
  settings.add_to(btrain);
  auto* bppl = base->add_subcommand("perplexity", "trigram perplexity of a corpus");
  bppl->add_option("--model", model_arg, "trigram artifact")->required();
  bppl->add_option("--corpus", corpus_arg, "test corpus")->required();
  settings.add_to(bppl);

  auto* inspect = app.add_subcommand("inspect", "summarize a model artifact");
  inspect->add_option("model", model_arg, "model artifact")->required();
  inspect->add_option("--dump-tree", tree, "T, E, R, O, L, C, P or W:<tag>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "dialoglm: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*validate) return cmd_validate(corpus_arg, out);
    if (*stats) return cmd_stats(corpus_arg, json, out);
    if (*inspect) return cmd_inspect(model_arg, tree, out);

    RunConfig cfg = settings.resolve();
    if (!corpus_arg.empty()) cfg.corpus = corpus_arg;
    if (!model_arg.empty()) cfg.model = model_arg;
    if (!report_arg.empty()) cfg.report = report_arg;
    if (folds) cfg.set("folds", std::to_string(*folds));
    cfg.validate();

    if (*cluster) return cmd_cluster(cfg, dump, out);
    if (*train) return cmd_train(cfg, out);
    if (*dec) return cmd_decode(cfg, output, sidecar, out);
    if (*ev) return cmd_eval(cfg, baseline, table, out);
    if (*xval) return cmd_xval(cfg, table, ablations, out);
    if (*btrain) return cmd_baseline_train(cfg, out);
    if (*bppl) return cmd_baseline_perplexity(cfg, out);
  } catch (const UsageError& e) {
    err << "dialoglm: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "dialoglm: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("dialoglm");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dlm
