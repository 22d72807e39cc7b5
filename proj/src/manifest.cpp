// Copyright 2026  The emokit Authors
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

#include "emokit/manifest.hpp"

#include <algorithm>

#include "emokit/hashing.hpp"

namespace emokit {

namespace fs = std::filesystem;

std::string HashPath(const fs::path& path) {
  if (!fs::is_directory(path)) return Sha256File(path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string joined;
  for (const auto& f : files) {
    joined += fs::relative(f, path).generic_string();
    joined += ' ';
    joined += Sha256File(f);
    joined += '\n';
  }
  return Sha256Hex(joined);
}

Json RunManifest::ToJson() const {
  auto hashes = [](const std::vector<fs::path>& paths) {
    Json out = Json::object();
    for (const auto& p : paths) out[p.generic_string()] = HashPath(p);
    return out;
  };
  return {{"subcommand", subcommand},
          {"config", config},
          {"inputs", hashes(inputs)},
          {"outputs", hashes(outputs)},
          {"tool_version", EMOKIT_VERSION},
          {"seed", seed}};
}

void RunManifest::Write(const fs::path& path) const {
  WriteTextFile(path, ToJson().dump(2) + "\n");
}

}  // namespace emokit
