// src/artifact.cpp
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

#include "dialoglm/artifact.hpp"

#include <zlib.h>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/array.hpp>
#include <cereal/types/map.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/unordered_map.hpp>
#include <cereal/types/utility.hpp>
#include <cereal/types/vector.hpp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dialoglm/error.hpp"

namespace dlm {

namespace {

constexpr char kMagic[4] = {'D', 'L', 'M', 'A'};
constexpr std::size_t kHeader = 4 + 4 + 1 + 8 + 4;

template <class T>
void put(std::string& out, T v) {
  // little-endian regardless of host
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return static_cast<T>(v);
}

std::uint32_t checksum(const std::string& s, std::size_t from) {
  uLong c = crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(s.data() + from);
  std::size_t left = s.size() - from;
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

template <class Model>
std::string encode(const Model& model, ArtifactType type) {
  std::ostringstream payload;
  {
    cereal::PortableBinaryOutputArchive ar(payload);
    ar(model);
  }
  const std::string body = payload.str();
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kArtifactVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(type));
  put<std::uint64_t>(out, body.size());
  put<std::uint32_t>(out, checksum(body, 0));
  out += body;
  return out;
}

template <class Model>
Model decode(const std::string& bytes, ArtifactType want) {
  const ArtifactType got = artifact_type(bytes);
  if (got != want)
    throw DataError(std::string("artifact holds a ") + artifact_type_name(got) + " model, expected " +
                    artifact_type_name(want));
  std::istringstream in(bytes.substr(kHeader));
  Model m;
  try {
    cereal::PortableBinaryInputArchive ar(in);
    ar(m);
  } catch (const cereal::Exception& e) {
    throw DataError(std::string("corrupt model payload: ") + e.what());
  }
  return m;
}

}  // namespace

const char* artifact_type_name(ArtifactType t) {
  switch (t) {
    case ArtifactType::Joint: return "joint";
    case ArtifactType::Trigram: return "trigram";
  }
  return "unknown";
}

std::string encode_artifact(const JointModel& model) { return encode(model, ArtifactType::Joint); }
std::string encode_artifact(const NgramModel& model) { return encode(model, ArtifactType::Trigram); }

ArtifactType artifact_type(const std::string& bytes) {
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError("not a model artifact");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kArtifactVersion)
    throw DataError("unsupported artifact version " + std::to_string(version));
  const auto type = get<std::uint8_t>(bytes, 8);
  if (type != static_cast<std::uint8_t>(ArtifactType::Joint) &&
      type != static_cast<std::uint8_t>(ArtifactType::Trigram))
    throw DataError("unknown artifact type " + std::to_string(type));
  const auto size = get<std::uint64_t>(bytes, 9);
  if (size != bytes.size() - kHeader) throw DataError("artifact is truncated or has trailing bytes");
  if (get<std::uint32_t>(bytes, 17) != checksum(bytes, kHeader))
    throw DataError("artifact checksum mismatch");
  return static_cast<ArtifactType>(type);
}

JointModel decode_joint(const std::string& bytes) {
  return decode<JointModel>(bytes, ArtifactType::Joint);
}

NgramModel decode_trigram(const std::string& bytes) {
  return decode<NgramModel>(bytes, ArtifactType::Trigram);
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace dlm
