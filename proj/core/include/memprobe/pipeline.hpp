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

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memprobe/baselines.hpp"
#include "memprobe/corpus.hpp"
#include "memprobe/external_scorer.hpp"
#include "memprobe/ngram.hpp"
#include "memprobe/probe.hpp"
#include "memprobe/prompt.hpp"
#include "memprobe/scoring.hpp"
#include "memprobe/selector.hpp"
#include "memprobe/stub_model.hpp"
#include "memprobe/target.hpp"

namespace memprobe {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitProbeErrors = 2;

struct ScorerSpec {
  enum class Type { kNgram, kHttp };
  Type type = Type::kNgram;
  // n-gram parameters; `train` is a JSONL corpus path or "self" to train on
  // the input dataset.
  std::size_t order = 3;
  double alpha = 1e-4;
  std::string train = "self";
  // external scorer parameters
  std::string url;
  std::size_t top_n = 0;
};

struct TargetSpec {
  enum class Type { kHttp, kStub };
  Type type = Type::kStub;
  EndpointConfig endpoint;
  double recall_probability = 1.0;
  // Optional JSONL dataset stored verbatim into the stub before probing.
  std::string contaminate_path;
};

struct BaselineConfig {
  std::size_t n_prefix_words = 50;
  std::string prefix_template = "prefix_fiction";
  double holdout_fraction = 0.2;
  std::size_t max_output_tokens = 256;
};

struct ContaminateConfig {
  std::vector<std::string> strategies = {"Prob", "Rank", "Prob+IF",
                                         "Rank+IF"};
  double contaminate_fraction = 0.5;
};

struct PipelineConfig {
  std::filesystem::path dataset;
  std::filesystem::path out_dir = "out";
  std::filesystem::path cache_path;     // empty = out_dir/cache.jsonl
  std::filesystem::path templates_dir;  // empty = $MEMPROBE_TEMPLATES or core/templates
  std::uint64_t seed = 0;
  double beta = 0.1;
  ScorerSpec scorer;
  SelectionConfig selection;
  std::vector<EndpointConfig> filter_models;
  std::optional<EndpointConfig> informative_model;
  TargetSpec target;
  std::string probe_template = "fiction_cloze";
  BaselineConfig baseline;
  ContaminateConfig contaminate;

  std::filesystem::path candidates_path() const;
  std::filesystem::path probes_path() const;
  std::filesystem::path outcomes_path() const;
  std::filesystem::path resolved_cache_path() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j);

/// Per-probe outcome as written to outcomes.jsonl.
struct ProbeOutcome {
  std::string doc_id;
  std::size_t position = 0;
  std::string strategy;
  std::string template_id;
  std::string gold;
  std::string raw_response;
  std::optional<std::string> guess;
  std::string parse_path;
  bool matched = false;
  bool errored = false;
  std::string error;
};

nlohmann::json candidate_to_json(const CandidateToken& c);
CandidateToken candidate_from_json(const nlohmann::json& j);
nlohmann::json outcome_to_json(const ProbeOutcome& o);
ProbeOutcome outcome_from_json(const nlohmann::json& j);
nlohmann::json probe_to_json(const Probe& p);

std::vector<CandidateToken> load_candidates(const std::filesystem::path& path);
std::vector<ProbeOutcome> load_outcomes(const std::filesystem::path& path);

/// Assembled runtime pieces for one pipeline invocation.
struct PipelineRuntime {
  LabeledDataset dataset;
  std::shared_ptr<const TemplateRegistry> templates;
  std::shared_ptr<const NGramModel> ngram;  // set when the scorer is builtin
  std::unique_ptr<TokenScorer> external;    // set when the scorer is HTTP
  const TokenScorer* scorer = nullptr;
  std::unique_ptr<ResponseCache> cache;
  std::unique_ptr<StubModel> stub;          // set when the target is the stub
  std::unique_ptr<ChatClient> http_target;  // set when the target is HTTP
  CompletionBackend* target = nullptr;
  std::vector<std::unique_ptr<ChatClient>> filters;
};

/// Loads dataset/templates/scorer/target per the config. `transport_factory`
/// lets tests swap the HTTP transport; pass nullptr for the default.
PipelineRuntime build_runtime(
    const PipelineConfig& config,
    std::unique_ptr<HttpTransport> (*transport_factory)() = nullptr);

// Subcommand drivers; each returns a process exit code and writes its
// outputs under config.out_dir.
int cmd_select(const PipelineConfig& config);
int cmd_filter(const PipelineConfig& config,
               const std::filesystem::path& candidates = {});
int cmd_probe(const PipelineConfig& config,
              const std::filesystem::path& candidates = {});
int cmd_baseline(const PipelineConfig& config);
int cmd_contaminate(const PipelineConfig& config);
int cmd_report(const PipelineConfig& config,
               const std::filesystem::path& outcomes = {});

/// Library form of cmd_probe used by tests and cmd_contaminate: builds
/// probes for the surviving candidates, executes them against `target`
/// through `templates`, and returns per-probe outcomes in candidate order.
std::vector<ProbeOutcome> execute_probes(const LabeledDataset& dataset,
                                         const std::vector<CandidateToken>& candidates,
                                         const PromptTemplate& tpl,
                                         CompletionBackend& target);

/// Groups outcomes per document and produces verdicts for every document in
/// the dataset (documents without probes abstain).
std::vector<DocVerdict> verdicts_from_outcomes(
    const LabeledDataset& dataset, const std::vector<ProbeOutcome>& outcomes,
    std::size_t min_matches);

}  // namespace memprobe
