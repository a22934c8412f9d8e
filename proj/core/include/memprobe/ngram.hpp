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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/scorer.hpp"

namespace memprobe {

/// Bijective token <-> id mapping with a reserved unknown entry at id 0.
class Vocab {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  Vocab();

  std::uint32_t add(std::string_view token);  // returns existing id if known
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  bool contains(std::string_view token) const;
  /// Id of `token`, or the unknown id (0) for out-of-vocabulary tokens.
  std::uint32_t id_or_unknown(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Additively smoothed forward n-gram model. For a context c of length
/// min(order-1, position):
///
///   P(w | c) = (count(c, w) + alpha) / (count(c) + alpha * |V|)
///
/// An unseen context therefore yields the uniform distribution 1/|V|. The
/// model is frozen after training; scoring is const and thread-safe.
class NGramModel final : public TokenScorer {
 public:
  std::size_t order() const { return order_; }
  double alpha() const { return alpha_; }
  const Vocab& vocab() const { return vocab_; }

  PositionDistribution position_distribution(
      const std::vector<std::string>& tokens,
      std::size_t position) const override;

  /// Smoothed P(token | context) using the last min(order-1, |context|)
  /// context tokens.
  double probability(const std::vector<std::string>& context,
                     std::string_view token) const;

  /// Most probable token id for the given context, skipping the reserved
  /// unknown entry.
  std::uint32_t argmax_id(const std::vector<std::string>& context) const;

 private:
  friend NGramModel train_ngram(const std::vector<Document>&, std::size_t,
                                double);

  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<std::uint32_t, std::uint32_t> by_token;
  };

  std::vector<std::uint32_t> context_ids(
      const std::vector<std::string>& tokens, std::size_t position) const;
  const ContextCounts* lookup(const std::vector<std::uint32_t>& ctx) const;

  std::size_t order_ = 1;
  double alpha_ = 1.0;
  Vocab vocab_;
  // levels_[len] maps a packed context of `len` token ids to its counts.
  std::vector<std::unordered_map<std::string, ContextCounts>> levels_;
};

/// Trains an order-`order` model (order in [1,5], alpha > 0) on the corpus.
/// Context windows never cross document boundaries.
NGramModel train_ngram(const std::vector<Document>& corpus, std::size_t order,
                       double alpha);

}  // namespace memprobe
