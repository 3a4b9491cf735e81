// src/corpus.cpp
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

#include "dialoglm/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

namespace {

constexpr std::string_view kPseudoNames[kNumPseudoTags] = {"TURN", "TONE", "PUSH", "POP",
                                                           "MOD",  "CAN",  "ABR"};
constexpr std::string_view kPseudoSurfaces[kNumPseudoTags] = {"<turn>", "T", "Push", "Pop",
                                                              "M",      "C", "A"};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("bad integer for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

std::string_view field_value(std::string_view field, std::string_view key) {
  if (field.size() <= key.size() || field.substr(0, key.size()) != key ||
      field[key.size()] != '=')
    throw DataError("expected field '" + std::string(key) + "=...', got '" + std::string(field) +
                    "'");
  return field.substr(key.size() + 1);
}

// Inclusive "a-b" in the file, half-open internally; "-" is empty.
Span parse_span(std::string_view s, std::string_view what) {
  if (s == "-") return {};
  auto dash = s.find('-');
  if (dash == std::string_view::npos || dash == 0)
    throw DataError("bad span for " + std::string(what) + ": '" + std::string(s) + "'");
  int a = parse_int(s.substr(0, dash), what);
  int b = parse_int(s.substr(dash + 1), what);
  if (b < a) throw DataError("reversed span for " + std::string(what));
  return {a, b + 1};
}

std::vector<Correspondence> parse_corr(std::string_view s) {
  std::vector<Correspondence> out;
  if (s == "-") return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto item = s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start);
    if (item.size() < 5 || item[1] != ':')
      throw DataError("bad correspondence '" + std::string(item) + "'");
    Correspondence c;
    if (item[0] == 'm') c.kind = CorrKind::Match;
    else if (item[0] == 'r') c.kind = CorrKind::Replace;
    else throw DataError("correspondence kind must be m or r: '" + std::string(item) + "'");
    auto pair = item.substr(2);
    auto dash = pair.find('-');
    if (dash == std::string_view::npos)
      throw DataError("bad correspondence '" + std::string(item) + "'");
    c.reparandum = parse_int(pair.substr(0, dash), "correspondence");
    c.alteration = parse_int(pair.substr(dash + 1), "correspondence");
    out.push_back(c);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

RepairKind parse_kind(std::string_view s) {
  if (s == "mod") return RepairKind::Modification;
  if (s == "can") return RepairKind::FreshStart;
  if (s == "abr") return RepairKind::Abridged;
  throw DataError("repair kind must be mod, can or abr: '" + std::string(s) + "'");
}

void write_span(std::ostream& out, Span s) {
  if (s.empty()) out << '-';
  else out << s.begin << '-' << (s.end - 1);
}

}  // namespace

// ---------------------------------------------------------------------------

bool AnnotatedTurn::has_tone(int position) const {
  return std::binary_search(tones.begin(), tones.end(), position);
}

Tagset::Tagset(const std::set<std::string>& real_tags) {
  for (const auto& name : real_tags) {
    if (name.empty()) throw DataError("empty POS tag");
    auto info = classify(name);
    if (info.is_pseudo) throw DataError("POS tag '" + name + "' is reserved");
    tags_.push_back(std::move(info));
  }
  num_real_ = static_cast<int>(tags_.size());
  for (auto n : kPseudoNames) tags_.push_back(TagInfo{std::string(n), false, false, false, true});
  for (std::size_t i = 0; i < tags_.size(); ++i) index_[tags_[i].name] = static_cast<int>(i);
}

TagInfo Tagset::classify(const std::string& name) {
  TagInfo info;
  info.name = name;
  for (auto n : kPseudoNames)
    if (name == n) info.is_pseudo = true;
  if (info.is_pseudo) return info;
  info.is_filled_pause = name == "UH_FP";
  info.is_fragment = name == "FRAGMENT";
  info.is_discourse_marker =
      !info.is_filled_pause && (name == "AC" || (name.size() > 2 && name.ends_with("_D")));
  return info;
}

std::string_view Tagset::pseudo_name(PseudoTag t) { return kPseudoNames[static_cast<int>(t)]; }
std::string_view Tagset::pseudo_surface(PseudoTag t) {
  return kPseudoSurfaces[static_cast<int>(t)];
}

std::optional<TagId> Tagset::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TagId Tagset::id(const std::string& name) const {
  auto t = find(name);
  if (!t) throw DataError("unknown POS tag '" + name + "'");
  return *t;
}

void Corpus::refresh() {
  std::set<std::string> tags;
  vocabulary.clear();
  for (const auto& d : dialogs)
    for (const auto& t : d.turns)
      for (const auto& tok : t.tokens) {
        tags.insert(tok.pos);
        vocabulary.insert(tok.surface);
      }
  tagset = Tagset(tags);
}

std::size_t Corpus::num_turns() const {
  std::size_t n = 0;
  for (const auto& d : dialogs) n += d.turns.size();
  return n;
}

std::size_t Corpus::num_words() const {
  std::size_t n = 0;
  for (const auto& d : dialogs)
    for (const auto& t : d.turns) n += t.tokens.size();
  return n;
}

Corpus make_corpus(std::vector<Dialog> dialogs) {
  Corpus c;
  c.dialogs = std::move(dialogs);
  for (const auto& d : c.dialogs)
    for (const auto& t : d.turns) validate_turn(t);
  c.refresh();
  return c;
}

// ---------------------------------------------------------------------------

void validate_turn(const AnnotatedTurn& turn) {
  const int n = turn.size();
  if (n == 0) throw DataError("turn " + turn.utterance_id + " has no tokens");
  for (const auto& tok : turn.tokens) {
    if (tok.surface.empty()) throw DataError("empty token surface");
    if (tok.pos.empty()) throw DataError("token '" + tok.surface + "' has no POS tag");
    if (!(tok.silence_before >= 0.0))
      throw DataError("negative silence before '" + tok.surface + "'");
    if (tok.is_fragment && tok.pos != "FRAGMENT")
      throw DataError("fragment '" + tok.surface + "' must carry the FRAGMENT tag");
  }
  for (std::size_t k = 0; k < turn.tones.size(); ++k) {
    int t = turn.tones[k];
    if (t < 1 || t > n) throw DataError("tone position " + std::to_string(t) + " out of bounds");
    if (k > 0 && turn.tones[k - 1] >= t) throw DataError("tone positions not strictly increasing");
  }

  // 0 = free; edit: 1 Push, 2 ET, 3 Pop; repair: occupied flag
  std::vector<int> edit(static_cast<std::size_t>(n), 0);
  std::vector<char> repair(static_cast<std::size_t>(n), 0);
  int prev_ip = -1;
  for (const auto& r : turn.repairs) {
    const std::string where = "repair at ip=" + std::to_string(r.ip) + ": ";
    if (r.ip <= prev_ip) throw DataError(where + "repairs must have strictly increasing ip");
    prev_ip = r.ip;
    if (r.ip < 1 || r.ip >= n) throw DataError(where + "ip out of bounds");
    if (r.kind == RepairKind::Abridged) {
      if (!r.reparandum.empty()) throw DataError(where + "abridged repair with nonempty reparandum");
      if (r.editing_term.empty()) throw DataError(where + "abridged repair without editing term");
      if (!r.correspondences.empty())
        throw DataError(where + "abridged repair with correspondences");
    } else {
      if (r.reparandum.empty()) throw DataError(where + "reparandum is empty");
      if (r.reparandum.begin < 0 || r.reparandum.end != r.ip)
        throw DataError(where + "reparandum span out of bounds (must end at the ip)");
    }
    if (!r.editing_term.empty()) {
      if (r.editing_term.begin != r.ip)
        throw DataError(where + "editing term must begin at the ip");
      if (r.editing_term.end > n) throw DataError(where + "editing term span out of bounds");
    }
    const int alt = r.alteration_onset();
    if (alt >= n) throw DataError(where + "no alteration before the turn ends");

    int prev_rep = -1, prev_alt = -1;
    for (const auto& c : r.correspondences) {
      if (!r.reparandum.contains(c.reparandum))
        throw DataError(where + "correspondence reparandum index out of bounds");
      if (c.alteration < alt || c.alteration >= n)
        throw DataError(where + "correspondence alteration index out of bounds");
      if (c.reparandum <= prev_rep || c.alteration <= prev_alt)
        throw DataError(where + "correspondences violate cross-serial order");
      prev_rep = c.reparandum;
      prev_alt = c.alteration;
      if (c.kind == CorrKind::Replace &&
          turn.tokens[static_cast<std::size_t>(c.reparandum)].pos !=
              turn.tokens[static_cast<std::size_t>(c.alteration)].pos)
        throw DataError(where + "r-correspondence between different POS tags");
    }

    auto mark_edit = [&](int i, int v) {
      if (edit[static_cast<std::size_t>(i)] != 0)
        throw DataError(where + "editing term overlaps another repair");
      edit[static_cast<std::size_t>(i)] = v;
    };
    if (!r.editing_term.empty()) {
      mark_edit(r.editing_term.begin, 1);
      for (int i = r.editing_term.begin + 1; i < r.editing_term.end; ++i) mark_edit(i, 2);
      mark_edit(alt, 3);
    }
    if (repair[static_cast<std::size_t>(alt)])
      throw DataError(where + "two repairs share an alteration onset");
    repair[static_cast<std::size_t>(alt)] = 1;
  }
  for (int i = 0; i < n; ++i)
    if (repair[static_cast<std::size_t>(i)] &&
        (edit[static_cast<std::size_t>(i)] == 1 || edit[static_cast<std::size_t>(i)] == 2))
      throw DataError("alteration onset " + std::to_string(i) + " lies inside an editing term");
}

// ---------------------------------------------------------------------------

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  int lineno = 0;
  AnnotatedTurn* turn = nullptr;
  int turn_line = 0;

  auto finish_turn = [&]() {
    if (!turn) return;
    std::sort(turn->tones.begin(), turn->tones.end());
    std::stable_sort(turn->repairs.begin(), turn->repairs.end(),
                     [](const auto& a, const auto& b) { return a.ip < b.ip; });
    try {
      validate_turn(*turn);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(turn_line) + ": turn " + turn->utterance_id + ": " +
                      e.what());
    }
    turn = nullptr;
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    try {
      if (fields[0] == "#") {
        if (fields.size() >= 2 && fields[1] == "dialog") {
          if (fields.size() != 3) throw DataError("expected '# dialog <id>'");
          finish_turn();
          corpus.dialogs.push_back(Dialog{std::string(fields[2]), {}});
        }
        continue;  // other comment lines
      }
      if (fields[0].front() == '#') continue;
      if (fields[0] == "turn") {
        if (fields.size() != 3) throw DataError("expected 'turn <speaker> <utt-id>'");
        if (corpus.dialogs.empty()) throw DataError("turn before any '# dialog' header");
        finish_turn();
        auto& d = corpus.dialogs.back();
        d.turns.push_back(AnnotatedTurn{std::string(fields[1]), std::string(fields[2]), {}, {}, {}});
        turn = &d.turns.back();
        turn_line = lineno;
        continue;
      }
      if (!turn) throw DataError("'" + std::string(fields[0]) + "' line outside of a turn");
      if (fields[0] == "w") {
        if (fields.size() < 3 || fields.size() > 5)
          throw DataError("expected 'w <surface> pos=<TAG> [frag] [sil=<seconds>]'");
        Token tok;
        tok.surface = std::string(fields[1]);
        tok.pos = std::string(field_value(fields[2], "pos"));
        if (tok.pos.empty()) throw DataError("empty POS tag");
        std::size_t k = 3;
        if (k < fields.size() && fields[k] == "frag") {
          tok.is_fragment = true;
          ++k;
        }
        if (k < fields.size()) {
          double s = parse_double(field_value(fields[k], "sil"), "sil");
          if (!(s >= 0.0)) throw DataError("negative silence");
          tok.silence_before = std::round(s * 1000.0) / 1000.0;
          ++k;
        }
        if (k != fields.size()) throw DataError("unexpected field '" + std::string(fields[k]) + "'");
        turn->tokens.push_back(std::move(tok));
      } else if (fields[0] == "tone") {
        if (fields.size() != 2) throw DataError("expected 'tone <i>'");
        turn->tones.push_back(parse_int(fields[1], "tone"));
      } else if (fields[0] == "repair") {
        if (fields.size() != 6)
          throw DataError("expected 'repair kind= ip= rep= et= corr='");
        RepairAnnotation r;
        r.kind = parse_kind(field_value(fields[1], "kind"));
        r.ip = parse_int(field_value(fields[2], "ip"), "ip");
        r.reparandum = parse_span(field_value(fields[3], "rep"), "rep");
        r.editing_term = parse_span(field_value(fields[4], "et"), "et");
        r.correspondences = parse_corr(field_value(fields[5], "corr"));
        turn->repairs.push_back(std::move(r));
      } else {
        throw DataError("unknown line type '" + std::string(fields[0]) + "'");
      }
    } catch (const DataError& e) {
      std::string msg = e.what();
      if (msg.starts_with("line ")) throw;
      throw DataError("line " + std::to_string(lineno) + ": " + msg);
    }
  }
  finish_turn();
  corpus.refresh();
  return corpus;
}

Corpus parse_corpus(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in);
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return parse_corpus(in);
}

std::string_view repair_kind_code(RepairKind k) {
  switch (k) {
    case RepairKind::Modification: return "mod";
    case RepairKind::FreshStart: return "can";
    case RepairKind::Abridged: return "abr";
  }
  return "mod";
}

void write_turn(std::ostream& out, const AnnotatedTurn& turn) {
  out << "turn " << turn.speaker << ' ' << turn.utterance_id << '\n';
  for (const auto& tok : turn.tokens) {
    out << "w " << tok.surface << " pos=" << tok.pos;
    if (tok.is_fragment) out << " frag";
    if (tok.silence_before > 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", tok.silence_before);
      out << " sil=" << buf;
    }
    out << '\n';
  }
  for (int t : turn.tones) out << "tone " << t << '\n';
  for (const auto& r : turn.repairs) {
    out << "repair kind=" << repair_kind_code(r.kind) << " ip=" << r.ip << " rep=";
    write_span(out, r.reparandum);
    out << " et=";
    write_span(out, r.editing_term);
    out << " corr=";
    if (r.correspondences.empty()) out << '-';
    for (std::size_t k = 0; k < r.correspondences.size(); ++k) {
      const auto& c = r.correspondences[k];
      if (k) out << ',';
      out << (c.kind == CorrKind::Match ? 'm' : 'r') << ':' << c.reparandum << '-' << c.alteration;
    }
    out << '\n';
  }
}

void serialize_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.dialogs) {
    out << "# dialog " << d.id << '\n';
    for (const auto& t : d.turns) write_turn(out, t);
  }
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  serialize_corpus(out, corpus);
  return out.str();
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  std::set<std::string> speakers;
  s.dialogs = corpus.dialogs.size();
  for (const auto& d : corpus.dialogs)
    for (const auto& t : d.turns) {
      ++s.turns;
      speakers.insert(t.speaker);
      s.words += t.tokens.size();
      for (const auto& tok : t.tokens)
        if (Tagset::classify(tok.pos).is_discourse_marker) ++s.discourse_markers;
      s.tones += t.tones.size();
      for (int p : t.tones)
        if (p < t.size()) ++s.turn_internal_tones;
      for (const auto& r : t.repairs) {
        switch (r.kind) {
          case RepairKind::Abridged: ++s.abridged_repairs; break;
          case RepairKind::Modification: ++s.modification_repairs; break;
          case RepairKind::FreshStart: ++s.fresh_starts; break;
        }
        if (!r.editing_term.empty()) ++s.editing_terms;
      }
    }
  s.speakers = speakers.size();
  return s;
}

Lexicon::Lexicon(std::vector<std::string> words) : words_(std::move(words)) {
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
}

int Lexicon::id(const std::string& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? -1 : it->second;
}

Lexicon build_lexicon(const std::vector<const AnnotatedTurn*>& turns, int min_count) {
  std::map<std::string, int> counts;
  for (const auto* t : turns)
    for (const auto& tok : t->tokens) ++counts[tok.surface];
  std::vector<std::string> words;
  for (const auto& [w, c] : counts)
    if (c >= min_count) words.push_back(w);
  return Lexicon(std::move(words));
}

}  // namespace dlm
