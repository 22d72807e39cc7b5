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

#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "emokit/error.hpp"
#include "emokit/leaderboard.hpp"

namespace emokit {

namespace {

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kUnauthorized:
      return 401;
    case ErrorCode::kIo:
    case ErrorCode::kTransport:
      return 500;
    default:
      return 400;
  }
}

void SendJson(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::vector<std::string> SplitCsv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

struct LeaderboardServer::Impl {
  Leaderboard& board;
  std::string token;
  httplib::Server server;

  Impl(Leaderboard& b, std::string t) : board(b), token(std::move(t)) {}

  template <typename Fn>
  httplib::Server::Handler Guard(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        SendJson(res, HttpStatus(e.code()), e.ToJson());
      } catch (const std::exception& e) {
        SendJson(res, 500, Error(ErrorCode::kIo, e.what()).ToJson());
      }
    };
  }

  void Routes() {
    server.Post("/v1/submissions", Guard([this](const httplib::Request& req,
                                                httplib::Response& res) {
      if (token.empty() || req.get_header_value("Authorization") != "Bearer " + token) {
        throw Error(ErrorCode::kUnauthorized, "missing or invalid bearer token");
      }
      if (!req.has_file("metadata") || !req.has_file("predictions")) {
        throw Error(ErrorCode::kInvalidArgument,
                    "multipart form needs \"metadata\" and \"predictions\" parts");
      }
      Json metadata;
      try {
        metadata = Json::parse(req.get_file_value("metadata").content);
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::kParse, std::string("metadata is not JSON: ") + e.what());
      }
      std::optional<std::string> key;
      if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
      const auto outcome = board.Submit(metadata, req.get_file_value("predictions").content, key);
      SendJson(res, outcome.created ? 201 : 200, board.SubmissionJson(outcome.submission));
    }));

    server.Get(R"(/v1/leaderboard/([^/]+))", Guard([this](const httplib::Request& req,
                                                          httplib::Response& res) {
      const std::string dataset = req.matches[1];
      const std::string condition = req.get_param_value("condition");
      Json rows = Json::array();
      int rank = 0;
      for (const auto& row : board.Rankings(dataset, condition)) {
        Json j = row.ToJson();
        j["rank"] = ++rank;
        rows.push_back(std::move(j));
      }
      SendJson(res, 200, {{"dataset", dataset}, {"condition", condition}, {"rows", rows}});
    }));

    server.Get(R"(/v1/submissions/([^/]+))", Guard([this](const httplib::Request& req,
                                                          httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto s = board.Get(id);
      if (!s) throw Error(ErrorCode::kNotFound, "unknown submission \"" + id + "\"");
      SendJson(res, 200, board.SubmissionJson(*s));
    }));

    server.Get("/v1/compare", Guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto ids = SplitCsv(req.get_param_value("ids"));
      if (ids.empty()) throw Error(ErrorCode::kInvalidArgument, "ids query parameter is empty");
      SendJson(res, 200, board.Compare(ids));
    }));

    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
  }
};

LeaderboardServer::LeaderboardServer(Leaderboard& board, std::string token)
    : impl_(std::make_unique<Impl>(board, std::move(token))) {
  impl_->Routes();
}

LeaderboardServer::~LeaderboardServer() = default;

int LeaderboardServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void LeaderboardServer::Listen() { impl_->server.listen_after_bind(); }

void LeaderboardServer::Stop() { impl_->server.stop(); }

}  // namespace emokit
