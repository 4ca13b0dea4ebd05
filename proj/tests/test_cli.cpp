/*
 * Copyright 2026 The pruning-mbr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pmbr/cli.hpp"
#include "pmbr/error.hpp"

using namespace pmbr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pmbr");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Scratch directory with a small synthetic corpus in it.
class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() /
           ("pmbr-cli-" + std::to_string(std::rand()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(dir_);
    const auto r = run({"synth", "-o", path("corpus.jsonl"), "--instances", "4",
                        "--hypotheses", "12", "--pool-size", "64", "--edit-rate",
                        "0.4", "--vocab-size", "50", "--min-length", "4",
                        "--max-length", "8"});
    REQUIRE(r.code == 0);
  }
  ~Workspace() { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("grid parsing") {
  CHECK(parse_grid("0.8,0.9,0.99") == std::vector<double>{0.8, 0.9, 0.99});
  const auto betas = parse_grid("0.05:0.95:0.05");
  REQUIRE(betas.size() == 19);
  CHECK(betas.front() == 0.05);
  CHECK(betas[5] == 0.3);
  CHECK(betas.back() == 0.95);
  CHECK(parse_grid("0.1,0.2:0.4:0.1") == std::vector<double>{0.1, 0.2, 0.3, 0.4});
  CHECK_THROWS_AS(parse_grid("a,b"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0.1:0.5"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0.5:0.1:0.1"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0.1:0.5:0"), ValidationError);
}

TEST_CASE("decode writes one line per instance and trial") {
  Workspace ws;
  const auto r = run({"decode", "-i", ws.path("corpus.jsonl"), "--method",
                      "confidence:0.9", "--schedule", "8,16,32,64", "--trials", "2"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::pair<std::string, int>> keys;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    keys.emplace_back(j["id"], j["trial"]);
    CHECK(j["total_calls"].get<int>() > 0);
  }
  REQUIRE(keys.size() == 8);
  CHECK(keys[0] == std::pair<std::string, int>{"synth-00000", 0});
  CHECK(keys[1] == std::pair<std::string, int>{"synth-00000", 1});
  CHECK(keys[7] == std::pair<std::string, int>{"synth-00003", 1});

  const auto standard = run({"decode", "-i", ws.path("corpus.jsonl"), "--refs", "32"});
  REQUIRE(standard.code == 0);
  CHECK(nlohmann::json::parse(standard.out.substr(0, standard.out.find('\n')))
            ["pseudo_refs_used"] == 32);
}

TEST_CASE("sweep emits one row per configuration") {
  Workspace ws;
  const auto r = run({"sweep", "-i", ws.path("corpus.jsonl"), "--schedule",
                      "8,16,32,64", "--trials", "1", "--n-boot", "50", "--out",
                      ws.path("sweep")});
  REQUIRE(r.code == 0);
  CHECK(count_lines(slurp(ws.path("sweep_summary.csv"))) == 1 + 25);
  CHECK(count_lines(slurp(ws.path("sweep.csv"))) == 1 + 25);
  const auto j = nlohmann::json::parse(slurp(ws.path("sweep.json")));
  CHECK(j["aggregated"].size() == 25);
}

TEST_CASE("false-prune grid") {
  Workspace ws;
  const auto r = run({"false-prune", "-i", ws.path("corpus.jsonl"), "--sizes",
                      "8,16,32,64", "--trials", "2", "--n-boot", "50", "--out",
                      ws.path("fp")});
  REQUIRE(r.code == 0);
  CHECK(count_lines(slurp(ws.path("fp.csv"))) == 1 + 12);
  CHECK(nlohmann::json::parse(slurp(ws.path("fp.json")))["cells"].size() == 12);
}

TEST_CASE("report table") {
  Workspace ws;
  const auto r = run({"report", "-i", ws.path("corpus.jsonl"), "--schedule",
                      "8,16,32,64", "--trials", "1", "--n-boot", "50", "--out",
                      ws.path("table")});
  REQUIRE(r.code == 0);
  const auto csv = slurp(ws.path("table.csv"));
  CHECK(count_lines(csv) == 6);
  CHECK(csv.substr(0, csv.find('\n')) == "metric,standard,confidence:0.99,confidence:0.9");
  CHECK(r.out.find("# Utility calls") != std::string::npos);
}

TEST_CASE("trace output") {
  Workspace ws;
  const auto r = run({"trace", "-i", ws.path("corpus.jsonl"), "--schedule",
                      "8,16,32,64", "--trials", "2", "--n-boot", "50", "--out",
                      ws.path("trace")});
  REQUIRE(r.code == 0);
  const auto csv = slurp(ws.path("trace.csv"));
  CHECK(csv.substr(0, csv.find('\n')) == "step,refs,mean,q1,q3,runs");
}

TEST_CASE("outputs do not depend on the worker count") {
  Workspace ws;
  for (const char* jobs : {"1", "3"}) {
    REQUIRE(run({"sweep", "-i", ws.path("corpus.jsonl"), "--schedule", "8,16,32,64",
                 "--trials", "2", "--n-boot", "50", "--alphas", "0.9,0.99",
                 "--betas", "0.5", "--jobs", jobs, "--out",
                 ws.path(std::string("s") + jobs)})
                .code == 0);
    REQUIRE(run({"false-prune", "-i", ws.path("corpus.jsonl"), "--sizes", "8,64",
                 "--trials", "2", "--n-boot", "50", "--jobs", jobs, "--out",
                 ws.path(std::string("f") + jobs)})
                .code == 0);
  }
  CHECK(slurp(ws.path("s1.csv")) == slurp(ws.path("s3.csv")));
  CHECK(slurp(ws.path("s1.json")) == slurp(ws.path("s3.json")));
  CHECK(slurp(ws.path("f1.csv")) == slurp(ws.path("f3.csv")));
  CHECK(slurp(ws.path("f1.json")) == slurp(ws.path("f3.json")));

  const std::vector<std::string> decode = {"decode", "-i", ws.path("corpus.jsonl"),
                                           "--method", "confidence:0.9",
                                           "--schedule", "8,16,32,64", "--trials", "2"};
  auto d3 = decode;
  d3.insert(d3.end(), {"--jobs", "3"});
  CHECK(run(decode).out == run(d3).out);
}

TEST_CASE("precomputed matrices decode like the live metric") {
  Workspace ws;
  REQUIRE(run({"matrix", "-i", ws.path("corpus.jsonl"), "-o", ws.path("m.jsonl")})
              .code == 0);
  const std::vector<std::string> base = {"decode", "-i", ws.path("corpus.jsonl"),
                                         "--method", "rank:0.5", "--schedule",
                                         "8,16,32,64"};
  auto with_matrix = base;
  with_matrix.insert(with_matrix.end(), {"--utility", "matrix:" + ws.path("m.jsonl")});
  const auto a = run(base), b = run(with_matrix);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("synth with no edits copies the gold sentence") {
  Workspace ws;
  REQUIRE(run({"synth", "-o", ws.path("clean.jsonl"), "--instances", "2",
               "--edit-rate", "0"})
              .code == 0);
  std::istringstream lines(slurp(ws.path("clean.jsonl")));
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const auto& h : j["hypotheses"]) CHECK(h == j["reference"]);
  }
}

TEST_CASE("chart") {
  Workspace ws;
  std::ofstream(ws.path("two.csv")) << "family,mean_calls,accuracy\n"
                                       "confidence,10,0.5\nconfidence,20,0.9\n"
                                       "standard,40,1\n";
  REQUIRE(run({"chart", "-i", ws.path("two.csv"), "-o", ws.path("two.svg")}).code == 0);
  const auto svg = slurp(ws.path("two.svg"));
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  const auto pts = svg.substr(svg.find("points=\""));
  CHECK(std::count(pts.begin(), pts.begin() + static_cast<long>(pts.find("\"/>")), ',') == 2);

  const auto missing = run({"chart", "-i", ws.path("two.csv"), "-o",
                            ws.path("bad.svg"), "--y", "nope"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("accuracy") != std::string::npos);
  CHECK(!fs::exists(ws.path("bad.svg")));
  std::ofstream(ws.path("empty.csv")) << "family,mean_calls,accuracy\n";
  CHECK(run({"chart", "-i", ws.path("empty.csv"), "-o", ws.path("e.svg")}).code == 1);
  CHECK(!fs::exists(ws.path("e.svg")));
  CHECK(run({"chart", "-i", ws.path("none.csv"), "-o", ws.path("n.svg")}).code == 2);
}

TEST_CASE("exit codes") {
  Workspace ws;
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"decode", "--help"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"decode", "-i", ws.path("missing.jsonl")}).code == 2);
  CHECK(run({"decode", "-i", ws.path("corpus.jsonl"), "--method", "beam"}).code == 1);
  CHECK(run({"decode", "-i", ws.path("corpus.jsonl"), "--method", "confidence:2"}).code == 1);
  CHECK(run({"decode", "-i", ws.path("corpus.jsonl"), "--schedule", "8,128"}).code == 1);
  CHECK(run({"decode", "-i", ws.path("corpus.jsonl"), "--utility", "bleu"}).code == 1);
  CHECK(run({"decode", "-i", ws.path("corpus.jsonl"), "--seed", "x"}).code == 1);
  CHECK(run({"decode", "-i", ws.path("corpus.jsonl"), "--schedule",
             "8,64", "--utility", "remote:http://127.0.0.1:1", "--remote-timeout", "1", "--remote-retries",
             "0"})
            .code == 3);
  std::ofstream(ws.path("bad.jsonl")) << "{\"id\": 1}\n";
  const auto bad = run({"decode", "-i", ws.path("bad.jsonl")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 1") != std::string::npos);
}

TEST_CASE("config files and environment overrides") {
  Workspace ws;
  const std::vector<std::string> base = {"decode", "-i", ws.path("corpus.jsonl"),
                                         "--method", "confidence:0.9", "--schedule",
                                         "8,16,32,64"};
  auto seeded = base;
  seeded.insert(seeded.end(), {"--seed", "7"});
  const auto expected = run(seeded).out;
  REQUIRE(expected != run(base).out);

  std::ofstream(ws.path("cfg.json")) << R"({"seed": 7})";
  auto with_config = base;
  with_config.insert(with_config.end(), {"--config", ws.path("cfg.json")});
  CHECK(run(with_config).out == expected);

  std::ofstream(ws.path("nested.json")) << R"({"decode": {"seed": 7}, "sweep": {"seed": 1}})";
  auto nested = base;
  nested.insert(nested.end(), {"--config", ws.path("nested.json")});
  CHECK(run(nested).out == expected);

  // Command-line flags win over the file.
  auto both = with_config;
  both.insert(both.end(), {"--seed", "1"});
  CHECK(run(both).out == run(base).out);

  std::ofstream(ws.path("typo.json")) << R"({"sede": 7})";
  auto typo = base;
  typo.insert(typo.end(), {"--config", ws.path("typo.json")});
  CHECK(run(typo).code == 1);

  ::setenv("PMBR_SEED", "7", 1);
  const auto env = run(base);
  ::unsetenv("PMBR_SEED");
  CHECK(env.out == expected);
}

}  // TEST_SUITE
