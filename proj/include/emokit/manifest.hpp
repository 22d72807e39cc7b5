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

#ifndef EMOKIT_MANIFEST_HPP_
#define EMOKIT_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emokit/jsonl.hpp"

namespace emokit {

/// Record of one CLI run. Contains no timestamps, so identical runs give
/// identical manifests.
struct RunManifest {
  std::string subcommand;
  Json config = Json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::uint64_t seed = 7;

  /// Hashes inputs and outputs (directories hash every regular file in
  /// sorted order).
  Json ToJson() const;
  void Write(const std::filesystem::path& path) const;
};

std::string HashPath(const std::filesystem::path& path);

}  // namespace emokit

#endif  // EMOKIT_MANIFEST_HPP_
