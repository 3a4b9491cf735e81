// include/dialoglm/perplexity.hpp
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

#include <cstddef>

namespace dlm {

/// Pooled log2 word probabilities: perplexity = 2^(-log2_sum / words).
struct PerplexityResult {
  double log2_sum = 0.0;
  std::size_t words = 0;

  double perplexity() const;
  void add(const PerplexityResult& o) {
    log2_sum += o.log2_sum;
    words += o.words;
  }
};

}  // namespace dlm
