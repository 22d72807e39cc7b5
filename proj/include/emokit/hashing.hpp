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

#ifndef EMOKIT_HASHING_HPP_
#define EMOKIT_HASHING_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace emokit {

/// Lower-case hex SHA-256.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

}  // namespace emokit

#endif  // EMOKIT_HASHING_HPP_
