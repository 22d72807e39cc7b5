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

#include "emokit/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "emokit/error.hpp"

namespace emokit {

void ForEachJsonLine(std::istream& in, const std::string& source,
                     const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, "malformed JSON: " + std::string(e.what()))
          .WithLocation(source, line_no);
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParse, "expected a JSON object").WithLocation(source, line_no);
    }
    try {
      fn(obj, line_no);
    } catch (Error& e) {
      if (!e.file()) e.WithLocation(source, line_no);
      throw;
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, e.what()).WithLocation(source, line_no);
    }
  }
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

Json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, "malformed JSON: " + std::string(e.what()))
        .WithLocation(path.string());
  }
}

std::string ToJsonLines(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

const Json& RequireField(const Json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kParse, "missing field \"" + std::string(key) + "\"");
  }
  return *it;
}

std::string RequireString(const Json& obj, std::string_view key) {
  const Json& v = RequireField(obj, key);
  if (!v.is_string()) {
    throw Error(ErrorCode::kParse, "field \"" + std::string(key) + "\" must be a string");
  }
  return v.get<std::string>();
}

std::optional<std::string> OptionalString(const Json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kParse, "field \"" + std::string(key) + "\" must be a string or null");
  }
  return it->get<std::string>();
}

std::vector<double> RequireNumberArray(const Json& obj, std::string_view key) {
  const Json& v = RequireField(obj, key);
  if (!v.is_array()) {
    throw Error(ErrorCode::kParse, "field \"" + std::string(key) + "\" must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw Error(ErrorCode::kParse, "field \"" + std::string(key) + "\" must hold numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace emokit
