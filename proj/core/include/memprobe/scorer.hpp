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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/corpus.hpp"

namespace memprobe {

class Vocab;

/// Per-position evidence for one token: natural-log probability and rank.
/// Rank counts vocabulary tokens with strictly greater probability, so the
/// argmax has rank 0 and ties do not increase rank.
struct TokenScore {
  std::size_t position = 0;
  std::string token;
  double logprob = 0.0;
  std::size_t rank = 0;
  // Set when the scorer returned a truncated top-N distribution and the
  // token fell outside it: rank is then a lower bound ("rank >= N") and
  // logprob an estimate rather than an exact value.
  bool rank_is_lower_bound = false;
  bool logprob_estimated = false;
};

/// Probability distribution over a scorer's vocabulary at one position.
/// Either backed by a Vocab (probs[i] belongs to vocab->token(i)) or by an
/// explicit token list (external scorers returning top-N maps).
class PositionDistribution {
 public:
  static PositionDistribution over_vocab(const Vocab* vocab,
                                         std::vector<double> probs);
  static PositionDistribution from_entries(std::vector<std::string> tokens,
                                           std::vector<double> probs,
                                           bool truncated, double residual);

  std::size_t size() const { return probs_.size(); }
  double prob_at(std::size_t i) const { return probs_[i]; }
  std::string_view token_at(std::size_t i) const;
  const std::vector<double>& probs() const { return probs_; }
  bool truncated() const { return truncated_; }
  double residual() const { return residual_; }

  /// Index of `token`; for vocab-backed distributions unknown tokens map to
  /// the reserved unknown entry, for truncated ones nullopt is returned.
  std::optional<std::size_t> index_of(std::string_view token) const;

  /// Logprob and strictly-greater rank of `token` at `position`.
  TokenScore score_of(std::string_view token, std::size_t position) const;

  std::size_t argmax() const;

 private:
  const Vocab* vocab_ = nullptr;
  std::vector<std::string> tokens_;
  std::vector<double> probs_;
  bool truncated_ = false;
  double residual_ = 0.0;
};

/// Contract for reference models: a probability distribution over the
/// model's vocabulary at a masked position, given the surrounding tokens.
/// Implementations must be deterministic once frozen.
class TokenScorer {
 public:
  virtual ~TokenScorer() = default;
  virtual PositionDistribution position_distribution(
      const std::vector<std::string>& tokens, std::size_t position) const = 0;
};

/// Scores every token position of `doc`. Throws SchemaError when the
/// document tokenizes to nothing.
std::vector<TokenScore> score_document(const TokenScorer& scorer,
                                       const Document& doc);
std::vector<TokenScore> score_tokens(const TokenScorer& scorer,
                                     const std::vector<std::string>& tokens);

/// exp(-mean per-token natural-log probability).
double perplexity(const TokenScorer& scorer, const Document& doc);

}  // namespace memprobe
