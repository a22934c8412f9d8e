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
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/ngram.hpp"
#include "memprobe/prompt.hpp"
#include "memprobe/target.hpp"

namespace memprobe {

/// A contaminable local target model for controlled experiments: documents
/// fed to `contaminate` are stored verbatim, and probes over stored text are
/// answered with the gold token with probability `recall_probability` (by a
/// seeded, per-prompt deterministic coin). Everything else falls back to the
/// base n-gram model. Also exposes token probabilities, mixing the base
/// distribution with verbatim recall on memorized documents, so
/// probability-based baselines can run against it.
///
/// Instances are immutable after construction; `contaminate` returns a new
/// stub. All queries are const and thread-safe.
class StubModel final : public CompletionBackend, public TokenScorer {
 public:
  struct Options {
    double recall_probability = 1.0;
    std::uint64_t seed = 0;
    std::size_t continuation_tokens = 64;  // length of free generations
  };

  StubModel(std::shared_ptr<const NGramModel> base,
            std::shared_ptr<const TemplateRegistry> templates,
            Options options);
  StubModel(std::shared_ptr<const NGramModel> base,
            std::shared_ptr<const TemplateRegistry> templates);

  std::string name() const override { return "stub"; }
  std::string complete(const std::string& prompt) override;

  PositionDistribution position_distribution(
      const std::vector<std::string>& tokens,
      std::size_t position) const override;

  const NGramModel& base() const { return *base_; }
  const Options& options() const { return options_; }
  bool knows(const std::string& doc_id) const;
  std::size_t memorized_count() const { return memorized_.size(); }

  friend StubModel contaminate(const StubModel& stub,
                               const std::vector<Document>& docs);

 private:
  struct MaskedEntry {
    std::string doc_id;
    std::string gold;
  };
  struct MemorizedDoc {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
  };

  std::string answer(const std::string& prompt) const;
  std::string complete_cloze(const std::string& masked_text,
                             const std::string& prompt) const;
  std::string complete_prefix(const std::string& prefix,
                              const std::string& prompt) const;
  std::string generate_from(const std::vector<std::string>& context,
                            std::size_t n_tokens) const;
  bool recall_coin(const std::string& prompt) const;

  std::shared_ptr<const NGramModel> base_;
  std::shared_ptr<const TemplateRegistry> templates_;
  Options options_;
  std::vector<MemorizedDoc> memorized_;                    // insertion order
  std::unordered_map<std::string, std::size_t> by_id_;     // doc_id -> index
  std::unordered_map<std::string, MaskedEntry> cloze_index_;
  std::unordered_map<std::string, std::size_t> by_token_key_;
};

/// Stores each document verbatim (idempotent per id) and returns the new
/// stub. The base model is unchanged.
StubModel contaminate(const StubModel& stub, const std::vector<Document>& docs);

}  // namespace memprobe
