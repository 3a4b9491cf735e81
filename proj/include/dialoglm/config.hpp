// include/dialoglm/config.hpp
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

#include <string>
#include <vector>

#include "dialoglm/decoder.hpp"
#include "dialoglm/model.hpp"
#include "dialoglm/ngram.hpp"

namespace dlm {

/// Everything a CLI run can be configured with.
struct RunConfig {
  std::string corpus;
  std::string model;
  std::string report;
  ModelConfig model_config;
  BeamOptions beam;
  NgramConfig baseline;
  int folds = 6;

  /// Sets one key; throws UsageError on an unknown key or bad value.
  void set(const std::string& key, const std::string& value);
  /// Applies validation that spans keys (corrections require repairs).
  void validate() const;
  /// key=value lines in a stable order.
  std::string dump() const;
};

inline constexpr const char* kConfigEnv = "DIALOGLM_CONFIG";

/// Flat key=value text: '#' starts a comment, blank lines are ignored.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& origin);
void apply_config_file(RunConfig& config, const std::string& path);

/// Defaults, then the file named by `path` (or by $DIALOGLM_CONFIG when
/// `path` is empty), then `overrides` ("key=value" each).
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace dlm
