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

#include "emokit/error.hpp"

namespace emokit {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnknownClass: return "unknown_class";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kDimension: return "dimension_mismatch";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kUnscorable: return "unscorable";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kUnauthorized: return "unauthorized";
    case ErrorCode::kTransport: return "transport_error";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& message, nlohmann::json details)
    : std::runtime_error(message), code_(code), details_(std::move(details)) {}

Error& Error::WithLocation(std::string file, std::optional<std::size_t> line) {
  file_ = std::move(file);
  line_ = line;
  return *this;
}

nlohmann::json Error::ToJson() const {
  nlohmann::json body = {{"code", ToString(code_)}, {"message", what()}};
  if (file_) body["file"] = *file_;
  if (line_) body["line"] = *line_;
  if (!details_.is_null()) body["details"] = details_;
  return {{"error", body}};
}

}  // namespace emokit
