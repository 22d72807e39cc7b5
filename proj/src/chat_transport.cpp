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

#include "emokit/chat_transport.hpp"

#include <filesystem>

#include <httplib.h>

#include "emokit/error.hpp"
#include "emokit/hashing.hpp"

namespace emokit {

Json ChatRequest::ToBody() const {
  Json body = {{"model", model},
               {"temperature", temperature},
               {"seed", seed},
               {"messages",
                Json::array({{{"role", "system"}, {"content", system_prompt}},
                             {{"role", "user"}, {"content", user_message}}})}};
  if (json_mode) body["response_format"] = {{"type", "json_object"}};
  return body;
}

std::string FixtureTransport::FixtureKey(const std::string& user_message) {
  return Sha256Hex(user_message);
}

std::string FixtureTransport::Complete(const ChatRequest& request) {
  const auto key = FixtureKey(request.user_message);
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kTransport, "no fixture reply for batch " + key,
                {{"fixture", path.string()}});
  }
  return ReadTextFile(path);
}

HttpChatTransport::HttpChatTransport(std::string base_url, std::string api_key,
                                     std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (api_key_.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("missing API key; set ") + kApiKeyEnv);
  }
}

std::string HttpChatTransport::Complete(const ChatRequest& request) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_bearer_token_auth(api_key_);
  const auto res =
      client.Post("/v1/chat/completions", request.ToBody().dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransport,
                "chat request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kTransport, "chat endpoint returned HTTP " + std::to_string(res->status),
                {{"body", res->body}});
  }
  try {
    const Json reply = Json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kTransport, std::string("malformed chat reply: ") + e.what());
  }
}

}  // namespace emokit
