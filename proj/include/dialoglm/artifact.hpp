// include/dialoglm/artifact.hpp
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

#include <cstdint>
#include <string>

#include "dialoglm/model.hpp"
#include "dialoglm/ngram.hpp"

namespace dlm {

enum class ArtifactType : std::uint8_t { Joint = 1, Trigram = 2 };
const char* artifact_type_name(ArtifactType t);

inline constexpr std::uint32_t kArtifactVersion = 1;

/// Container layout: magic "DLMA", format version, type tag, payload size,
/// crc32 of the payload, then the cereal portable-binary payload.
std::string encode_artifact(const JointModel& model);
std::string encode_artifact(const NgramModel& model);

/// Throws DataError on a bad magic, version, checksum or type.
ArtifactType artifact_type(const std::string& bytes);
JointModel decode_joint(const std::string& bytes);
NgramModel decode_trigram(const std::string& bytes);

void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);  // DataError if unreadable

}  // namespace dlm
