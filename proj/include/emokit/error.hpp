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

#ifndef EMOKIT_ERROR_HPP_
#define EMOKIT_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace emokit {

enum class ErrorCode {
  kParse,
  kInvalidArgument,
  kUnknownClass,
  kDuplicateId,
  kDimension,
  kNotFound,
  kUnscorable,
  kIo,
  kValidation,
  kConflict,
  kUnauthorized,
  kTransport,
};

std::string_view ToString(ErrorCode code);

/// Every failure surfaced by the library. Carries a machine-readable code,
/// an optional source location inside an input file, and free-form details
/// (for example the list of missing utterance ids) so the CLI and the
/// leaderboard can emit the same structured error payload.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nullptr);

  ErrorCode code() const { return code_; }
  const nlohmann::json& details() const { return details_; }
  const std::optional<std::string>& file() const { return file_; }
  std::optional<std::size_t> line() const { return line_; }

  Error& WithLocation(std::string file, std::optional<std::size_t> line = {});

  /// {"error": {"code", "message", "file"?, "line"?, "details"?}}
  nlohmann::json ToJson() const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
  std::optional<std::string> file_;
  std::optional<std::size_t> line_;
};

}  // namespace emokit

#endif  // EMOKIT_ERROR_HPP_
