// tools/synth_corpus.cpp
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

// Writes the synthetic fixture corpus.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dialoglm/corpus.hpp"
#include "dialoglm/error.hpp"
#include "dialoglm/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic annotated dialog corpus"};
  dlm::SynthConfig cfg;
  std::string out;
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--dialogs", cfg.dialogs, "number of dialogs");
  app.add_option("--min-turns", cfg.min_turns, "fewest turns per dialog");
  app.add_option("--max-turns", cfg.max_turns, "most turns per dialog");
  app.add_option("-o,--output", out, "output path (default stdout)");
  CLI11_PARSE(app, argc, argv);
  if (cfg.dialogs < 1 || cfg.min_turns < 1 || cfg.max_turns < cfg.min_turns) {
    std::cerr << "error: invalid dialog or turn counts\n";
    return 2;
  }
  try {
    const dlm::Corpus corpus = dlm::synthesize_corpus(cfg);
    if (out.empty()) {
      dlm::serialize_corpus(std::cout, corpus);
    } else {
      std::ofstream f(out);
      if (!f) throw dlm::DataError("cannot write " + out);
      dlm::serialize_corpus(f, corpus);
    }
  } catch (const dlm::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
