// src/config.cpp
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

#include "dialoglm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("'" + key + "' expects a boolean, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("'" + key + "' expects an integer, got '" + v + "'");
  return x;
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return kInfinity;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || std::isnan(x))
    throw UsageError("'" + key + "' expects a number, got '" + v + "'");
  return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string format_double(double x) {
  if (x == kInfinity) return "inf";
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto& m = model_config;
  if (key == "corpus") corpus = value;
  else if (key == "model") model = value;
  else if (key == "report") report = value;
  else if (key == "enable_tones") m.mask.tones = parse_bool(key, value);
  else if (key == "enable_repairs") m.mask.repairs = parse_bool(key, value);
  else if (key == "enable_corrections") m.mask.corrections = parse_bool(key, value);
  else if (key == "enable_silences") m.silences = parse_bool(key, value);
  else if (key == "beam_width") beam.width = static_cast<int>(parse_int(key, value));
  else if (key == "beam_margin") beam.margin = parse_double(key, value);
  else if (key == "folds") folds = static_cast<int>(parse_int(key, value));
  else if (key == "heldout_fraction") m.heldout_fraction = parse_double(key, value);
  else if (key == "silence_bins") m.silence_edges = parse_list(key, value);
  else if (key == "min_leaf") m.tree.min_leaf = static_cast<int>(parse_int(key, value));
  else if (key == "max_depth") m.tree.max_depth = static_cast<int>(parse_int(key, value));
  else if (key == "seed") {
    const long long s = parse_int(key, value);
    if (s < 0) throw UsageError("seed must be nonnegative");
    m.seed = static_cast<std::uint64_t>(s);
  } else if (key == "mod_onset_window") m.mod_onset_window = static_cast<int>(parse_int(key, value));
  else if (key == "unk_divisor") m.unk_divisor = parse_double(key, value);
  else if (key == "vocab_min_count") m.vocab_min_count = static_cast<int>(parse_int(key, value));
  else if (key == "trigram_cutoff") baseline.gt_cutoff = static_cast<int>(parse_int(key, value));
  else if (key == "trigram_min_count") baseline.vocab_min_count = static_cast<int>(parse_int(key, value));
  else throw UsageError("unknown configuration key '" + key + "'");
}

void RunConfig::validate() const {
  model_config.validate();
  if (beam.width > 0 && !(beam.margin > 0.0)) throw UsageError("beam_margin must be positive");
  if (folds < 2) throw UsageError("folds must be at least 2");
  if (baseline.gt_cutoff < 0) throw UsageError("trigram_cutoff must be nonnegative");
}

std::string RunConfig::dump() const {
  const auto& m = model_config;
  std::ostringstream out;
  auto b = [](bool x) { return x ? "true" : "false"; };
  out << "enable_tones=" << b(m.mask.tones) << '\n'
      << "enable_repairs=" << b(m.mask.repairs) << '\n'
      << "enable_corrections=" << b(m.mask.corrections) << '\n'
      << "enable_silences=" << b(m.silences) << '\n'
      << "beam_width=" << beam.width << '\n'
      << "beam_margin=" << format_double(beam.margin) << '\n'
      << "folds=" << folds << '\n'
      << "heldout_fraction=" << format_double(m.heldout_fraction) << '\n';
  out << "silence_bins=";
  for (std::size_t i = 0; i < m.silence_edges.size(); ++i)
    out << (i ? "," : "") << format_double(m.silence_edges[i]);
  out << '\n'
      << "min_leaf=" << m.tree.min_leaf << '\n'
      << "max_depth=" << m.tree.max_depth << '\n'
      << "seed=" << m.seed << '\n'
      << "mod_onset_window=" << m.mod_onset_window << '\n'
      << "unk_divisor=" << format_double(m.unk_divisor) << '\n'
      << "vocab_min_count=" << m.vocab_min_count << '\n'
      << "trigram_cutoff=" << baseline.gt_cutoff << '\n'
      << "trigram_min_count=" << baseline.vocab_min_count << '\n';
  return out.str();
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(origin + ":" + std::to_string(no) + ": expected key=value");
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(origin + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(config, text.str(), path);
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig c;
  std::string file = path;
  if (file.empty())
    if (const char* env = std::getenv(kConfigEnv)) file = env;
  if (!file.empty()) apply_config_file(c, file);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + kv + "' is not key=value");
    c.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  c.validate();
  return c;
}

}  // namespace dlm
