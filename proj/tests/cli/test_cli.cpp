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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include "json.hpp"

#include "emokit/hashing.hpp"
#include "emokit/relabel.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

const fs::path kData = EMOKIT_TEST_DATA_DIR;
const fs::path kGolden = EMOKIT_GOLDEN_DIR;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

class Scratch {
 public:
  Scratch() {
    std::string tmpl = (fs::temp_directory_path() / "emokit-cli-XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

RunResult Run(const std::vector<std::string>& args) {
  Scratch s;
  std::string cmd = Quote(EMOKIT_CLI);
  for (const auto& a : args) cmd += " " + Quote(a);
  cmd += " >" + Quote((s / "out").string()) + " 2>" + Quote((s / "err").string());
  RunResult r;
  const int status = std::system(cmd.c_str());
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(s / "out");
  r.err = Slurp(s / "err");
  return r;
}

void CheckGolden(const std::string& name, const std::string& actual) {
  const fs::path path = kGolden / name;
  if (std::getenv("EMOKIT_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(path, std::ios::binary) << actual;
  }
  REQUIRE_MESSAGE(fs::exists(path), "missing golden file " << path);
  CHECK(Slurp(path) == actual);
}

TEST_CASE("help output matches the golden files") {
  const auto top = Run({"--help"});
  CHECK(top.exit_code == 0);
  CheckGolden("help.txt", top.out);
  for (const char* sub :
       {"aggregate", "partition", "evaluate", "relabel", "train", "synth", "report", "serve"}) {
    CAPTURE(sub);
    const auto r = Run({sub, "--help"});
    CHECK(r.exit_code == 0);
    CheckGolden(std::string("help_") + sub + ".txt", r.out);
  }
}

TEST_CASE("version and usage errors") {
  const auto v = Run({"--version"});
  CHECK(v.exit_code == 0);
  CHECK(v.out.find(EMOKIT_VERSION) != std::string::npos);
  CHECK(Run({}).exit_code == 2);
  CHECK(Run({"aggregate", "--rule", "xx", "--input", "a", "--output", "b"}).exit_code == 2);
}

TEST_CASE("evaluate reproduces the worked example") {
  Scratch s;
  const auto r = Run({"evaluate", "--pred", (kData / "worked_example/pred.jsonl").string(), "--gold",
                      (kData / "worked_example/gold.jsonl").string(), "--taxonomy",
                      (kData / "four.json").string(), "--json", "--output",
                      (s / "report.json").string()});
  REQUIRE(r.exit_code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["macro_f1"].get<double>() == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(j["n_samples"] == 3);
  CHECK(j["per_class"][1]["f1"].get<double>() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(Json::parse(Slurp(s / "report.json")) == j);
  const Json manifest = Json::parse(Slurp(s / "report.json.manifest.json"));
  CHECK(manifest["subcommand"] == "evaluate");
  CHECK(manifest.contains("inputs"));

  const auto table = Run({"evaluate", "--pred", (kData / "worked_example/pred.jsonl").string(),
                          "--gold", (kData / "worked_example/gold.jsonl").string(), "--taxonomy",
                          (kData / "four.json").string()});
  CHECK(table.out.find("macro-F1 0.400000") != std::string::npos);
}

TEST_CASE("errors are JSON on stderr with a nonzero exit") {
  Scratch s;
  std::ofstream(s / "pred.jsonl") << R"({"utterance_id": "u1", "distribution": [0.2, 0.4, 0.4, 0.0]})"
                                  << "\n";
  const auto r = Run({"evaluate", "--pred", (s / "pred.jsonl").string(), "--gold",
                      (kData / "worked_example/gold.jsonl").string(), "--taxonomy",
                      (kData / "four.json").string()});
  CHECK(r.exit_code == 1);
  const Json err = Json::parse(r.err.substr(r.err.find('{')));
  CHECK(err["error"]["code"] == "validation_error");
  CHECK(err["error"]["details"]["missing"] == Json::array({"u2", "u3"}));

  std::ofstream(s / "bad.jsonl") << R"({"utterance_id": "x", "dataset": "d", "speaker_id": "s", "votes": [{"rater_id": "r", "emotions": ["Q"]}]})"
                                 << "\n";
  const auto u = Run({"aggregate", "--rule", "ar", "--taxonomy", (kData / "four.json").string(),
                      "--input", (s / "bad.jsonl").string(), "--output", (s / "o.jsonl").string()});
  CHECK(u.exit_code == 1);
  const Json uerr = Json::parse(u.err.substr(u.err.find('{')));
  CHECK(uerr["error"]["code"] == "unknown_class");
  CHECK(uerr["error"]["line"] == 1);
}

TEST_CASE("aggregate and partition") {
  Scratch s;
  const auto input = (kData / "iemocap_small.jsonl").string();
  const auto tax = (kData / "four.json").string();
  const auto a = Run({"aggregate", "--rule", "ar", "--taxonomy", tax, "--input", input, "--output",
                      (s / "ar.jsonl").string(), "--report", (s / "loss.json").string()});
  REQUIRE(a.exit_code == 0);
  const Json loss = Json::parse(a.out);
  CHECK(loss.dump().find("\"ar\"") != std::string::npos);
  std::ifstream labels(s / "ar.jsonl");
  int lines = 0;
  for (std::string line; std::getline(labels, line);) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == 40);
  CHECK(fs::exists(s / "ar.jsonl.manifest.json"));

  const auto p = Run({"partition", "--scheme", "iemocap-5fold", "--taxonomy", tax, "--input",
                      input, "--output", (s / "plan.json").string()});
  REQUIRE(p.exit_code == 0);
  const Json plan = Json::parse(Slurp(s / "plan.json"));
  REQUIRE(plan["folds"].size() == 5);
  for (const auto& fold : plan["folds"]) {
    CHECK(fold["test"].size() == 8);
    CHECK(fold["train"].size() + fold["dev"].size() + fold["test"].size() == 40);
  }

  // the printed fold table leaks a dyad and is refused
  const auto leak = Run({"partition", "--scheme", "iemocap-5fold-printed", "--taxonomy", tax,
                         "--input", input, "--output", (s / "leak.json").string()});
  CHECK(leak.exit_code == 1);
  CHECK(leak.err.find("Dyad4") != std::string::npos);
}

TEST_CASE("training is reproducible from the command line") {
  Scratch s;
  REQUIRE(Run({"synth", "--output", (s / "synth").string(), "--classes", "2", "--layers", "3",
               "--dims", "16", "--utterances", "120"})
              .exit_code == 0);
  auto train = [&](const std::string& name) {
    return Run({"--seed", "7", "train", "--features", (s / "synth/features").string(), "--labels",
                (s / "synth/labels.jsonl").string(), "--plan", (s / "synth/plan.json").string(),
                "--taxonomy", (s / "synth/taxonomy.json").string(), "--epochs", "20", "--lr",
                "1e-3", "--hidden", "32", "--output", (s / name).string(), "--predictions",
                (s / (name + ".pred.jsonl")).string()});
  };
  REQUIRE(train("a.json").exit_code == 0);
  REQUIRE(train("b.json").exit_code == 0);
  CHECK(emokit::Sha256Hex(Slurp(s / "a.json")) == emokit::Sha256Hex(Slurp(s / "b.json")));
  CHECK(Slurp(s / "a.json.pred.jsonl") == Slurp(s / "b.json.pred.jsonl"));

  const auto ev = Run({"evaluate", "--pred", (s / "a.json.pred.jsonl").string(), "--gold",
                       (s / "synth/labels.jsonl").string(), "--plan",
                       (s / "synth/plan.json").string(), "--fold", "1", "--taxonomy",
                       (s / "synth/taxonomy.json").string(), "--json"});
  REQUIRE(ev.exit_code == 0);
  CHECK(Json::parse(ev.out)["macro_f1"].get<double>() >= 0.95);

  fs::create_directories(s / "cks");
  fs::copy_file(s / "a.json", s / "cks/a.json");
  const auto rep = Run({"report", "--checkpoints", (s / "cks").string(), "--out",
                        (s / "layers.json").string()});
  REQUIRE(rep.exit_code == 0);
  CHECK(Json::parse(Slurp(s / "layers.json"))["mean"].size() == 3);
}

TEST_CASE("relabel dry run estimates cost without a network") {
  Scratch s;
  std::ofstream(s / "typed.jsonl")
      << R"({"utterance_id": "p1", "dataset": "pod", "speaker_id": "s", "votes": [{"rater_id": "r", "emotions": ["happy"], "typed_description": "Joyful"}]})"
      << "\n"
      << R"({"utterance_id": "p2", "dataset": "pod", "speaker_id": "s", "votes": [{"rater_id": "r", "emotions": [], "typed_description": "Concerned"}]})"
      << "\n";
  const auto r = Run({"relabel", "--input", (s / "typed.jsonl").string(), "--dry-run"});
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("2") != std::string::npos);
  CHECK(r.out.find("0.009") != std::string::npos);
}

TEST_CASE("relabel replays recorded replies and merges them") {
  Scratch s;
  std::ofstream(s / "typed.jsonl")
      << R"({"utterance_id": "p1", "dataset": "pod", "speaker_id": "s1", "votes": [{"rater_id": "r1", "emotions": ["happy"], "typed_description": "Joyful"}, {"rater_id": "r2", "emotions": ["neutral"], "typed_description": null}]})"
      << "\n"
      << R"({"utterance_id": "p2", "dataset": "pod", "speaker_id": "s2", "votes": [{"rater_id": "r1", "emotions": [], "typed_description": "Concerned"}]})"
      << "\n"
      << R"({"utterance_id": "p3", "dataset": "pod", "speaker_id": "s3", "votes": [{"rater_id": "r1", "emotions": ["sad"], "typed_description": null}]})"
      << "\n";
  REQUIRE(Run({"aggregate", "--rule", "ar", "--smoothing", "0", "--input",
               (s / "typed.jsonl").string(), "--output", (s / "ar.jsonl").string()})
              .exit_code == 0);

  const std::vector<emokit::RelabelItem> batch = {
      {1, "Joyful", {0, 0, 0, 0, 0, 0.5, 0, 0.5}}, {2, "Concerned", std::vector<double>(8, 0.125)}};
  const std::string wire = emokit::EncodeBatch(batch);
  fs::create_directories(s / "mock");
  std::ofstream(s / "mock" / (emokit::FixtureTransport::FixtureKey(wire) + ".json"))
      << R"({"1": {"angry": 0, "sad": 0, "disgust": 0, "contempt": 0, "fear": 0, "neutral": 0.2,
                  "surprise": 0, "happy": 0.8, "reason": "joy outweighs calm"},
             "2": {"angry": 0, "sad": 0.3, "disgust": 0, "contempt": 0, "fear": 0.5,
                   "neutral": 0.2, "surprise": 0, "happy": 0, "reason": "worry"}})";

  const auto r = Run({"relabel", "--input", (s / "typed.jsonl").string(), "--labels",
                      (s / "ar.jsonl").string(), "--output", (s / "merged.jsonl").string(),
                      "--mock", (s / "mock").string()});
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  const Json stats = Json::parse(r.out);
  CHECK(stats["relabeled"] == 2);
  CHECK(stats["modified"] == 2);
  CHECK(stats["requests_sent"] == 1);
  CHECK(stats["fallback"] == 0);
  std::ifstream merged(s / "merged.jsonl");
  std::vector<Json> rows;
  for (std::string line; std::getline(merged, line);) rows.push_back(Json::parse(line));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0]["distribution"][7].get<double>() == doctest::Approx(0.8));
  CHECK(rows[1]["distribution"][4].get<double>() == doctest::Approx(0.5));
  CHECK(rows[2]["distribution"][1] == 1.0);

  // a second run finds every record done and sends nothing
  fs::create_directories(s / "empty");
  const auto again = Run({"relabel", "--input", (s / "typed.jsonl").string(), "--labels",
                          (s / "ar.jsonl").string(), "--output", (s / "merged.jsonl").string(),
                          "--mock", (s / "empty").string()});
  REQUIRE(again.exit_code == 0);
  CHECK(Json::parse(again.out)["requests_sent"] == 0);
}

// Starts `emokit serve` and reads the bound port from its first line.
class ServeProcess {
 public:
  ServeProcess(const fs::path& data_dir, const std::string& token) {
    int fds[2];
    REQUIRE(pipe(fds) == 0);
    pid_ = fork();
    REQUIRE(pid_ >= 0);
    if (pid_ == 0) {
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      execl(EMOKIT_CLI, EMOKIT_CLI, "serve", "--host", "127.0.0.1", "--port", "0", "--data-dir",
            data_dir.c_str(), "--token", token.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(fds[1]);
    std::string line;
    char c;
    while (read(fds[0], &c, 1) == 1 && c != '\n') line += c;
    close(fds[0]);
    const auto colon = line.rfind(':');
    REQUIRE_MESSAGE(colon != std::string::npos, "serve printed: " << line);
    port_ = std::stoi(line.substr(colon + 1));
  }
  ~ServeProcess() {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
  int port() const { return port_; }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

TEST_CASE("served scores equal offline evaluate output bit for bit") {
  Scratch s;
  const fs::path ds = s / "board/datasets/iemocap";
  fs::create_directories(ds / "gold");
  fs::copy_file(kData / "four.json", ds / "taxonomy.json");
  const auto input = (kData / "iemocap_small.jsonl").string();
  const auto tax = (kData / "four.json").string();
  REQUIRE(Run({"aggregate", "--rule", "ar", "--taxonomy", tax, "--input", input, "--output",
               (ds / "gold/ar.jsonl").string()})
              .exit_code == 0);
  REQUIRE(Run({"partition", "--scheme", "iemocap-5fold", "--taxonomy", tax, "--input", input,
               "--output", (ds / "plan.json").string()})
              .exit_code == 0);

  const Json plan = Json::parse(Slurp(ds / "plan.json"));
  std::ostringstream preds;
  int i = 0;
  for (const auto& id : plan["folds"][0]["test"]) {
    const double a = 0.05 * (i % 7), b = 0.1 * (i % 3);
    preds << Json{{"utterance_id", id}, {"distribution", {a, b, 0.3, 1.0 - a - b - 0.3}}}.dump()
          << "\n";
    ++i;
  }
  std::ofstream(s / "pred.jsonl") << preds.str();

  ServeProcess server(s / "board", "tok");
  httplib::Client c("127.0.0.1", server.port());
  const Json meta = {{"model_name", "fixture"}, {"dataset", "iemocap"}, {"fold", 1}};
  const httplib::MultipartFormDataItems items = {
      {"metadata", meta.dump(), "metadata.json", "application/json"},
      {"predictions", preds.str(), "predictions.jsonl", "application/x-ndjson"}};
  auto res = c.Post("/v1/submissions", {{"Authorization", "Bearer tok"}}, items);
  REQUIRE(res);
  REQUIRE(res->status == 201);
  const Json stored = Json::parse(res->body);

  const auto ev = Run({"evaluate", "--pred", (s / "pred.jsonl").string(), "--gold",
                       (ds / "gold/ar.jsonl").string(), "--plan", (ds / "plan.json").string(),
                       "--fold", "1", "--taxonomy", tax, "--json"});
  REQUIRE(ev.exit_code == 0);
  const Json offline = Json::parse(ev.out);
  CHECK(stored["score"]["macro_f1"].get<double>() == offline["macro_f1"].get<double>());
  CHECK(stored["score"]["per_class"] == offline["per_class"]);

  // drop one test utterance: rejected with its id
  std::istringstream all(preds.str());
  std::string first, rest, line;
  std::getline(all, first);
  while (std::getline(all, line)) rest += line + "\n";
  const httplib::MultipartFormDataItems partial = {
      {"metadata", meta.dump(), "metadata.json", "application/json"},
      {"predictions", rest, "predictions.jsonl", "application/x-ndjson"}};
  res = c.Post("/v1/submissions", {{"Authorization", "Bearer tok"}}, partial);
  REQUIRE(res);
  CHECK(res->status == 400);
  const std::string missing_id = Json::parse(first)["utterance_id"];
  CHECK(Json::parse(res->body)["error"]["details"]["missing"] == Json::array({missing_id}));

  const auto rows = c.Get("/v1/leaderboard/iemocap");
  REQUIRE(rows);
  CHECK(Json::parse(rows->body)["rows"][0]["model_name"] == "fixture");
}

}  // namespace
