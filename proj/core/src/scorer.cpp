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

#include "memprobe/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memprobe/error.hpp"
#include "memprobe/ngram.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

PositionDistribution PositionDistribution::over_vocab(
    const Vocab* vocab, std::vector<double> probs) {
  PositionDistribution d;
  d.vocab_ = vocab;
  d.probs_ = std::move(probs);
  return d;
}

PositionDistribution PositionDistribution::from_entries(
    std::vector<std::string> tokens, std::vector<double> probs, bool truncated,
    double residual) {
  PositionDistribution d;
  d.tokens_ = std::move(tokens);
  d.probs_ = std::move(probs);
  d.truncated_ = truncated;
  d.residual_ = residual;
  return d;
}

std::string_view PositionDistribution::token_at(std::size_t i) const {
  return vocab_ ? std::string_view(vocab_->token(i))
                : std::string_view(tokens_[i]);
}

std::optional<std::size_t> PositionDistribution::index_of(
    std::string_view token) const {
  if (vocab_) {
    return vocab_->id_or_unknown(token);
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == token) {
      return i;
    }
  }
  return std::nullopt;
}

TokenScore PositionDistribution::score_of(std::string_view token,
                                          std::size_t position) const {
  TokenScore score;
  score.position = position;
  score.token = std::string(token);

  auto idx = index_of(token);
  if (idx) {
    double p = probs_[*idx];
    score.logprob = std::log(p);
    std::size_t rank = 0;
    for (double q : probs_) {
      if (q > p) {
        ++rank;
      }
    }
    score.rank = rank;
    return score;
  }

  // Token fell outside a truncated top-N response: every returned entry is
  // at least as probable, so the true rank is >= N. The logprob estimate
  // spreads the residual mass over an assumed tail of N tokens and is capped
  // below the smallest retained logprob.
  score.rank = probs_.size();
  score.rank_is_lower_bound = true;
  double floor_p = residual_ > 0.0
                       ? residual_ / static_cast<double>(
                                         std::max<std::size_t>(1, probs_.size()))
                       : std::numeric_limits<double>::min();
  double min_entry =
      probs_.empty() ? 1.0 : *std::min_element(probs_.begin(), probs_.end());
  score.logprob = std::min(std::log(floor_p), std::log(min_entry)) - 1e-9;
  score.logprob_estimated = true;
  return score;
}

std::size_t PositionDistribution::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

std::vector<TokenScore> score_tokens(const TokenScorer& scorer,
                                     const std::vector<std::string>& tokens) {
  if (tokens.empty()) {
    throw SchemaError("cannot score an empty token sequence");
  }
  std::vector<TokenScore> scores;
  scores.reserve(tokens.size());
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    PositionDistribution dist = scorer.position_distribution(tokens, pos);
    scores.push_back(dist.score_of(tokens[pos], pos));
  }
  return scores;
}

std::vector<TokenScore> score_document(const TokenScorer& scorer,
                                       const Document& doc) {
  auto tokens = token_strings(doc.text);
  if (tokens.empty()) {
    throw SchemaError("document \"" + doc.id + "\" tokenizes to nothing");
  }
  return score_tokens(scorer, tokens);
}

double perplexity(const TokenScorer& scorer, const Document& doc) {
  auto scores = score_document(scorer, doc);
  double sum = 0.0;
  for (const TokenScore& s : scores) {
    sum += s.logprob;
  }
  return std::exp(-sum / static_cast<double>(scores.size()));
}

}  // namespace memprobe
