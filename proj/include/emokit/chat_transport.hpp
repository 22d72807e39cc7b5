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

#ifndef EMOKIT_CHAT_TRANSPORT_HPP_
#define EMOKIT_CHAT_TRANSPORT_HPP_

#include <chrono>
#include <filesystem>
#include <string>

#include "emokit/jsonl.hpp"

namespace emokit {

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  int seed = 7;
  bool json_mode = true;
  std::string system_prompt;
  std::string user_message;

  /// Chat-completions request body: temperature, seed, model,
  /// response_format {"type": "json_object"}, system + user messages.
  Json ToBody() const;
};

/// Sends one chat completion and returns the assistant message content.
/// Implementations must be callable from several threads at once.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string Complete(const ChatRequest& request) = 0;
};

/// Offline transport: the reply to a user message is read from
/// <dir>/<FixtureKey(user_message)>.json. Unknown messages fail with
/// kTransport so they count as a failed attempt.
class FixtureTransport : public ChatTransport {
 public:
  explicit FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string Complete(const ChatRequest& request) override;

  static std::string FixtureKey(const std::string& user_message);

 private:
  std::filesystem::path dir_;
};

/// POSTs to <base_url>/v1/chat/completions with a bearer token.
class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string base_url, std::string api_key,
                    std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string Complete(const ChatRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

inline constexpr const char* kApiKeyEnv = "EMOKIT_API_KEY";

}  // namespace emokit

#endif  // EMOKIT_CHAT_TRANSPORT_HPP_
