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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "memprobe/error.hpp"
#include "memprobe/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string cache_path;
  std::string candidates_path;
  std::string outcomes_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "pipeline config (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "override output directory");
  cmd->add_option("--cache", args.cache_path, "override response cache path");
  cmd->add_option("--seed", args.seed, "override config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

memprobe::PipelineConfig resolve(const CommonArgs& args) {
  memprobe::PipelineConfig config = memprobe::load_config(args.config_path);
  if (!args.out_dir.empty()) {
    config.out_dir = args.out_dir;
  }
  if (!args.cache_path.empty()) {
    config.cache_path = args.cache_path;
  }
  if (args.seed_set) {
    config.seed = args.seed;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "memprobe: detects training-data memorization in black-box language "
      "models by masking high-surprisal tokens and measuring reconstruction"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* select =
      app.add_subcommand("select", "find high-surprisal candidate tokens");
  add_common(select, args);
  auto* filter = app.add_subcommand(
      "filter", "drop candidates guessable by the knowledge-filter models");
  add_common(filter, args);
  filter->add_option("--candidates", args.candidates_path,
                     "candidate JSONL to filter");
  auto* probe = app.add_subcommand(
      "probe", "run cloze probes against the target model");
  add_common(probe, args);
  probe->add_option("--candidates", args.candidates_path,
                    "candidate JSONL to probe");
  auto* baseline = app.add_subcommand(
      "baseline", "prefix probing (LCS) and token-probability baselines");
  add_common(baseline, args);
  auto* contaminate = app.add_subcommand(
      "contaminate",
      "controlled-contamination experiment against the local stub");
  add_common(contaminate, args);
  auto* report =
      app.add_subcommand("report", "aggregate outcomes into metrics");
  add_common(report, args);
  report->add_option("--outcomes", args.outcomes_path,
                     "outcome JSONL to aggregate");

  CLI11_PARSE(app, argc, argv);

  try {
    memprobe::PipelineConfig config = resolve(args);
    if (select->parsed()) {
      return memprobe::cmd_select(config);
    }
    if (filter->parsed()) {
      return memprobe::cmd_filter(config, args.candidates_path);
    }
    if (probe->parsed()) {
      return memprobe::cmd_probe(config, args.candidates_path);
    }
    if (baseline->parsed()) {
      return memprobe::cmd_baseline(config);
    }
    if (contaminate->parsed()) {
      return memprobe::cmd_contaminate(config);
    }
    if (report->parsed()) {
      return memprobe::cmd_report(config, args.outcomes_path);
    }
  } catch (const memprobe::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return memprobe::kExitFatal;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return memprobe::kExitFatal;
  }
  return memprobe::kExitFatal;
}
