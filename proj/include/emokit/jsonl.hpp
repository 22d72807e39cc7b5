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

#ifndef EMOKIT_JSONL_HPP_
#define EMOKIT_JSONL_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace emokit {

using Json = nlohmann::json;

// Calls fn(object, line_number) for every non-blank line. Parse failures and
// exceptions thrown by fn are rethrown as Error tagged with source:line.
void ForEachJsonLine(std::istream& in, const std::string& source,
                     const std::function<void(const Json&, std::size_t)>& fn);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
Json ReadJsonFile(const std::filesystem::path& path);

// Serializes one object per line, compact, stable key order.
std::string ToJsonLines(const std::vector<Json>& records);

// Typed field accessors that raise kParse with the field name.
const Json& RequireField(const Json& obj, std::string_view key);
std::string RequireString(const Json& obj, std::string_view key);
std::optional<std::string> OptionalString(const Json& obj, std::string_view key);
std::vector<double> RequireNumberArray(const Json& obj, std::string_view key);

}  // namespace emokit

#endif  // EMOKIT_JSONL_HPP_
