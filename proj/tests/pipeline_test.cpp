// Copyright 2026 the memprobe authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "memprobe/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <doctest.h>
#include <httplib.h>

#include "memprobe/error.hpp"
#include "support/test_helpers.hpp"

using namespace memprobe;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes the synthetic fixture to disk and returns a ready config: n-gram
// scorer trained on the reference corpus, stub target contaminated with the
// labeled-member documents.
PipelineConfig synthetic_config(const testing::TempDir& tmp,
                                const testing::SyntheticFixture& fixture) {
  save_dataset(fixture.documents, tmp.path() / "docs.jsonl");
  LabeledDataset reference("reference", fixture.reference_corpus);
  save_dataset(reference, tmp.path() / "reference.jsonl");
  LabeledDataset memorized("memorized", fixture.contaminated_docs());
  save_dataset(memorized, tmp.path() / "memorized.jsonl");

  PipelineConfig config;
  config.dataset = tmp.path() / "docs.jsonl";
  config.out_dir = tmp.path() / "out";
  config.templates_dir = MEMPROBE_TEMPLATE_DIR;
  config.seed = 11;
  config.scorer.type = ScorerSpec::Type::kNgram;
  config.scorer.order = 3;
  config.scorer.alpha = 1e-4;
  config.scorer.train = (tmp.path() / "reference.jsonl").string();
  config.target.type = TargetSpec::Type::kStub;
  config.target.recall_probability = 1.0;
  config.target.contaminate_path = (tmp.path() / "memorized.jsonl").string();
  return config;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(MEMPROBE_CLI_PATH) + " " + args;
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("select finds exactly the planted high-surprisal tokens") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 20;
  options.n_contaminated = 10;
  auto fixture = testing::make_synthetic_fixture(321, options);
  PipelineConfig config = synthetic_config(tmp, fixture);

  CHECK(cmd_select(config) == kExitOk);
  auto candidates = load_candidates(config.candidates_path());
  CHECK(!candidates.empty());
  for (const auto& c : candidates) {
    const auto& planted = fixture.planted.at(c.doc_id);
    bool is_planted = false;
    for (const auto& [position, surface] : planted) {
      if (position == c.position && surface == c.surface) {
        is_planted = true;
      }
    }
    CHECK(is_planted);
    CHECK(c.logprob.has_value());
    CHECK(*c.logprob < -12.0);
  }
  // Every document contributed its plants.
  std::size_t expected = 0;
  for (const auto& [doc_id, plants] : fixture.planted) {
    expected += plants.size();
  }
  CHECK(candidates.size() == expected);
}

TEST_CASE("select then probe then report on the contaminated stub") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 30;
  options.n_contaminated = 15;
  auto fixture = testing::make_synthetic_fixture(654, options);
  PipelineConfig config = synthetic_config(tmp, fixture);

  REQUIRE(cmd_select(config) == kExitOk);
  REQUIRE(cmd_probe(config) == kExitOk);

  auto outcomes = load_outcomes(config.outcomes_path());
  CHECK(!outcomes.empty());
  std::size_t contaminated_matches = 0, clean_matches = 0;
  for (const auto& o : outcomes) {
    const Document* doc = fixture.documents.find(o.doc_id);
    REQUIRE(doc != nullptr);
    if (*doc->label == 1) {
      contaminated_matches += o.matched ? 1 : 0;
    } else {
      clean_matches += o.matched ? 1 : 0;
    }
  }
  CHECK(contaminated_matches > 0);
  CHECK(clean_matches == 0);

  REQUIRE(cmd_report(config) == kExitOk);
  auto report = nlohmann::json::parse(slurp(config.out_dir / "report.json"));
  REQUIRE(report["rows"].size() == 1);
  CHECK(report["rows"][0]["precision"].get<double>() == 100.0);
  CHECK(report["rows"][0]["recall"].get<double>() == 100.0);
}

TEST_CASE("probe rerun with a warm cache is byte-identical") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 10;
  options.n_contaminated = 5;
  auto fixture = testing::make_synthetic_fixture(987, options);
  PipelineConfig config = synthetic_config(tmp, fixture);

  REQUIRE(cmd_select(config) == kExitOk);
  REQUIRE(cmd_probe(config) == kExitOk);
  std::string first = slurp(config.outcomes_path());
  REQUIRE(cmd_probe(config) == kExitOk);
  CHECK(slurp(config.outcomes_path()) == first);

  std::string candidates_first = slurp(config.candidates_path());
  REQUIRE(cmd_select(config) == kExitOk);
  CHECK(slurp(config.candidates_path()) == candidates_first);
}

TEST_CASE("contaminate reports a large EM gap with a perfect-recall stub") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 24;
  options.n_contaminated = 12;  // labels ignored: contaminate re-splits
  auto fixture = testing::make_synthetic_fixture(111, options);
  PipelineConfig config = synthetic_config(tmp, fixture);
  config.target.contaminate_path.clear();
  config.contaminate.strategies = {"Prob", "Prob+IF"};

  REQUIRE(cmd_contaminate(config) == kExitOk);
  auto report = nlohmann::json::parse(
      slurp(config.out_dir / "contamination_report.json"));
  for (const auto& name : {"Prob", "Prob+IF"}) {
    const auto& s = report["strategies"][name];
    CHECK(s["em_contaminated"].get<double>() == 100.0);
    CHECK(s["em_clean"].get<double>() == 0.0);
    CHECK(s["delta_em"].get<double>() == 100.0);
  }
}

TEST_CASE("contaminate with recall zero shows no EM gap") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 12;
  options.n_contaminated = 6;
  auto fixture = testing::make_synthetic_fixture(222, options);
  PipelineConfig config = synthetic_config(tmp, fixture);
  config.target.contaminate_path.clear();
  config.target.recall_probability = 0.0;
  config.contaminate.strategies = {"Prob"};

  REQUIRE(cmd_contaminate(config) == kExitOk);
  auto report = nlohmann::json::parse(
      slurp(config.out_dir / "contamination_report.json"));
  CHECK(report["strategies"]["Prob"]["delta_em"].get<double>() == 0.0);
}

TEST_CASE("baseline computes LCS and MIA rows against the stub") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 40;
  options.n_contaminated = 20;
  options.sentences_per_doc = 10;  // long enough for 50-word prefixes
  auto fixture = testing::make_synthetic_fixture(333, options);
  PipelineConfig config = synthetic_config(tmp, fixture);
  config.baseline.holdout_fraction = 0.5;

  REQUIRE(cmd_baseline(config) == kExitOk);
  auto report = nlohmann::json::parse(
      slurp(config.out_dir / "baseline_report.json"));
  REQUIRE(report["rows"].size() >= 2);

  // The stub regurgitates memorized continuations, so the LCS classifier
  // separates the halves; MIA methods see the recall-mixed probabilities.
  for (const auto& row : report["rows"]) {
    CHECK(row["precision"].get<double>() == 100.0);
    CHECK(row["recall"].get<double>() == 100.0);
  }
  CHECK(std::filesystem::exists(config.out_dir / "classifier.json"));
}

TEST_CASE("select runs against an external HTTP scorer") {
  // Loopback reference scorer implementing the wire contract with a fixed
  // four-token distribution.
  httplib::Server server;
  server.Post("/score", [&](const httplib::Request& req,
                            httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    REQUIRE(body.contains("tokens"));
    REQUIRE(body.contains("position"));
    nlohmann::json reply;
    reply["logprobs"] = {{"the", std::log(0.5)},
                         {"cat", std::log(0.3)},
                         {"sat", std::log(0.19)},
                         {"quorvex", std::log(0.01)}};
    res.set_content(reply.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  testing::TempDir tmp;
  std::vector<Document> docs = {{"d1", "the cat sat quorvex the cat",
                                 std::nullopt, nlohmann::json::object()}};
  save_dataset(LabeledDataset("tiny", docs), tmp.path() / "docs.jsonl");

  PipelineConfig config;
  config.dataset = tmp.path() / "docs.jsonl";
  config.out_dir = tmp.path() / "out";
  config.templates_dir = MEMPROBE_TEMPLATE_DIR;
  config.scorer.type = ScorerSpec::Type::kHttp;
  config.scorer.url = "http://127.0.0.1:" + std::to_string(port) + "/score";
  config.selection.logprob_threshold = -4.0;
  // The stub target needs the builtin scorer, so probe against HTTP too.
  config.target.type = TargetSpec::Type::kHttp;
  config.target.endpoint.base_url =
      "http://127.0.0.1:" + std::to_string(port) + "/score";
  config.target.endpoint.model_name = "unused";

  CHECK(cmd_select(config) == kExitOk);
  auto candidates = load_candidates(config.candidates_path());
  REQUIRE(candidates.size() == 1);
  CHECK(candidates[0].surface == "quorvex");
  CHECK(candidates[0].position == 3);
  CHECK(candidates[0].rank == 3);

  auto meta = nlohmann::json::parse(slurp(config.out_dir /
                                          "select_report.json"));
  CHECK(meta["scorer"]["type"] == "http");

  server.stop();
  serving.join();
}

TEST_CASE("an empty dataset is a fatal error") {
  testing::TempDir tmp;
  std::ofstream(tmp.path() / "empty.jsonl").close();
  PipelineConfig config;
  config.dataset = tmp.path() / "empty.jsonl";
  CHECK_THROWS_AS(build_runtime(config), ConfigError);
}

TEST_CASE("config parsing applies defaults and validates") {
  nlohmann::json j;
  j["dataset"] = "x.jsonl";
  PipelineConfig config = config_from_json(j);
  CHECK(config.selection.logprob_threshold == -12.0);
  CHECK(config.selection.rank_threshold == 2000);
  CHECK(config.selection.max_candidates == 10);
  CHECK(config.selection.min_matches_for_verdict == 2);
  CHECK(config.beta == 0.1);
  CHECK(config.scorer.order == 3);
  CHECK(config.probe_template == "fiction_cloze");
  CHECK(config.resolved_cache_path() == config.out_dir / "cache.jsonl");

  CHECK_THROWS_AS(config_from_json(nlohmann::json::object()), ConfigError);
  nlohmann::json bad = j;
  bad["scorer"] = {{"type", "quantum"}};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
}

TEST_CASE("CLI: help, bad config, and full select/probe/report flow") {
  CHECK(run_cli("--help > /dev/null 2>&1") == 0);
  CHECK(run_cli("select --config /nonexistent.json 2>/dev/null") ==
        kExitFatal);

  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 10;
  options.n_contaminated = 5;
  auto fixture = testing::make_synthetic_fixture(909, options);
  PipelineConfig config = synthetic_config(tmp, fixture);

  nlohmann::json j;
  j["dataset"] = config.dataset.string();
  j["out_dir"] = config.out_dir.string();
  j["templates_dir"] = std::string(MEMPROBE_TEMPLATE_DIR);
  j["seed"] = 11;
  j["scorer"] = {{"type", "ngram"},
                 {"order", 3},
                 {"alpha", 1e-4},
                 {"train", config.scorer.train}};
  j["target"] = {{"type", "stub"},
                 {"recall_probability", 1.0},
                 {"contaminate", config.target.contaminate_path}};
  auto config_path = tmp.path() / "config.json";
  std::ofstream(config_path) << j.dump(2);

  CHECK(run_cli("select -c " + config_path.string() + " > /dev/null") == 0);
  CHECK(run_cli("probe -c " + config_path.string() + " > /dev/null") == 0);
  CHECK(run_cli("report -c " + config_path.string() + " > /dev/null") == 0);
  CHECK(std::filesystem::exists(config.out_dir / "report.json"));

  // Seed override changes nothing for the deterministic stub pipeline, but
  // the flag must parse.
  CHECK(run_cli("select -c " + config_path.string() +
                " --seed 42 > /dev/null") == 0);
}

TEST_CASE("report refuses unlabeled datasets") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 6;
  options.n_contaminated = 3;
  auto fixture = testing::make_synthetic_fixture(555, options);
  PipelineConfig config = synthetic_config(tmp, fixture);

  // Strip the labels.
  std::vector<Document> unlabeled;
  for (Document d : fixture.documents.documents()) {
    d.label.reset();
    unlabeled.push_back(std::move(d));
  }
  save_dataset(LabeledDataset("none", unlabeled), config.dataset);

  REQUIRE(cmd_select(config) == kExitOk);
  REQUIRE(cmd_probe(config) == kExitOk);
  CHECK_THROWS_AS(cmd_report(config), ConfigError);
}

TEST_CASE("filter subcommand drops candidates a filter endpoint guesses") {
  // Loopback filter model that always answers with the document's planted
  // token "Oruvek"; any candidate with that gold gets dropped.
  httplib::Server server;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                nlohmann::json reply;
                reply["choices"] = nlohmann::json::array(
                    {{{"message", {{"role", "assistant"},
                                   {"content", "<word>gamma</word>"}}}}});
                res.set_content(reply.dump(), "application/json");
              });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  testing::TempDir tmp;
  std::vector<Document> docs = {{"d1", "alpha beta gamma delta", std::nullopt,
                                 nlohmann::json::object()}};
  save_dataset(LabeledDataset("tiny", docs), tmp.path() / "docs.jsonl");

  PipelineConfig config;
  config.dataset = tmp.path() / "docs.jsonl";
  config.out_dir = tmp.path() / "out";
  config.templates_dir = MEMPROBE_TEMPLATE_DIR;
  config.scorer.train = "self";
  EndpointConfig filter;
  filter.base_url =
      "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  filter.model_name = "filter-a";
  config.filter_models.push_back(filter);

  // Hand-written candidates: one the filter guesses, one it does not.
  std::vector<nlohmann::json> rows;
  CandidateToken guessable;
  guessable.doc_id = "d1";
  guessable.position = 2;
  guessable.surface = "gamma";
  rows.push_back(candidate_to_json(guessable));
  CandidateToken kept;
  kept.doc_id = "d1";
  kept.position = 3;
  kept.surface = "delta";
  rows.push_back(candidate_to_json(kept));
  std::filesystem::create_directories(config.out_dir);
  {
    std::ofstream out(config.candidates_path());
    for (const auto& row : rows) {
      out << row.dump() << "\n";
    }
  }

  CHECK(cmd_filter(config) == kExitOk);
  auto filtered =
      load_candidates(config.out_dir / "candidates_filtered.jsonl");
  REQUIRE(filtered.size() == 2);
  CHECK(filtered[0].filtered_out);
  CHECK(filtered[0].filter_reason == "guessed by filter-a");
  CHECK_FALSE(filtered[1].filtered_out);

  server.stop();
  serving.join();
}

TEST_CASE("probe exits with the completed-with-errors code on a dead target") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 4;
  options.n_contaminated = 2;
  auto fixture = testing::make_synthetic_fixture(444, options);
  PipelineConfig config = synthetic_config(tmp, fixture);
  config.target.type = TargetSpec::Type::kHttp;
  config.target.endpoint.base_url = "http://127.0.0.1:9/unreachable";
  config.target.endpoint.model_name = "dead";
  config.target.endpoint.retry.max_attempts = 1;
  config.target.endpoint.retry.backoff = {std::chrono::milliseconds(1)};

  REQUIRE(cmd_select(config) == kExitOk);
  CHECK(cmd_probe(config) == kExitProbeErrors);
  auto outcomes = load_outcomes(config.outcomes_path());
  CHECK(!outcomes.empty());
  for (const auto& o : outcomes) {
    CHECK(o.errored);
  }
}

TEST_CASE("execute_probes marks failures and continues the batch") {
  testing::TempDir tmp;
  testing::SyntheticOptions options;
  options.n_documents = 4;
  options.n_contaminated = 2;
  auto fixture = testing::make_synthetic_fixture(777, options);

  std::vector<CandidateToken> candidates;
  for (const auto& [doc_id, plants] : fixture.planted) {
    CandidateToken c;
    c.doc_id = doc_id;
    c.position = plants.front().first;
    c.surface = plants.front().second;
    candidates.push_back(c);
  }
  PromptTemplate tpl("t", "{input}");
  testing::FailingBackend target;
  auto outcomes =
      execute_probes(fixture.documents, candidates, tpl, target);
  REQUIRE(outcomes.size() == candidates.size());
  for (const auto& o : outcomes) {
    CHECK(o.errored);
    CHECK_FALSE(o.matched);
  }
}
