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

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/prompt.hpp"
#include "memprobe/scorer.hpp"
#include "memprobe/target.hpp"

namespace memprobe {

enum class Strategy { kProb, kRank, kPerson, kInformativeWord };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name);

struct SelectionConfig {
  Strategy strategy = Strategy::kProb;
  double logprob_threshold = -12.0;
  std::size_t rank_threshold = 2000;
  std::size_t max_candidates = 10;
  std::size_t min_matches_for_verdict = 2;
  bool content_word_filter = true;

  void validate() const;  // throws ConfigError
};

/// A token position flagged as high-surprisal, with its evidence and an
/// audit trail of any knowledge filtering applied to it.
struct CandidateToken {
  std::string doc_id;
  std::size_t position = 0;
  std::string surface;
  std::optional<double> logprob;
  std::optional<std::size_t> rank;
  Strategy strategy = Strategy::kProb;
  bool rank_is_lower_bound = false;
  bool logprob_estimated = false;
  bool filtered_out = false;
  std::string filter_reason;  // which filter model guessed it
  bool filter_error = false;  // an endpoint failed; candidate kept
};

/// Threshold selection for the Prob and Rank strategies. Keeps positions
/// with logprob below / rank above the configured threshold, drops stopwords
/// and non-alphabetic tokens when the content-word filter is on, skips
/// position 0, and caps at max_candidates keeping the most extreme scores
/// (ties broken by earlier position). Output is ordered by position.
std::vector<CandidateToken> select_candidates(
    const Document& doc, const std::vector<TokenScore>& scores,
    const SelectionConfig& cfg);

struct PersonDetectorOptions {
  // When set, a capitalized token must also appear in the gazetteer.
  const std::unordered_set<std::string>* gazetteer = nullptr;
};

/// Person-name detection seam: swap in a real NER system here. The shipped
/// default is HeuristicPersonDetector.
class PersonDetector {
 public:
  virtual ~PersonDetector() = default;
  virtual std::vector<CandidateToken> detect(const Document& doc) const = 0;
};

/// Capitalized tokens that do not start a sentence and whose lowercase form
/// is not a common English word. One candidate per distinct surface form
/// (first occurrence).
class HeuristicPersonDetector final : public PersonDetector {
 public:
  explicit HeuristicPersonDetector(PersonDetectorOptions options = {});
  std::vector<CandidateToken> detect(const Document& doc) const override;

 private:
  PersonDetectorOptions options_;
};

/// Runs the default heuristic detector.
std::vector<CandidateToken> detect_person_tokens(
    const Document& doc, const PersonDetectorOptions& options = {});

/// Asks `filter_model` for the informative words of the document and keeps
/// the ones present verbatim among the document's tokens, capped at
/// `max_candidates` (earliest occurrences first).
std::vector<CandidateToken> select_informative_words(
    const Document& doc, CompletionBackend& filter_model,
    const PromptTemplate& instruction, std::size_t max_candidates);

/// Drops every candidate whose masked slot any filter model fills correctly
/// (guess matches the gold token after normalization). Every filter model
/// receives every candidate's probe; calls are batched per model with
/// concurrency bounded by that model's in-flight limit. Dropped candidates
/// stay in the returned list with filtered_out set and the guilty models
/// recorded; endpoint failures mark the candidate filter_error instead of
/// dropping it. AuthError propagates.
std::vector<CandidateToken> apply_knowledge_filter(
    std::vector<CandidateToken> candidates, const Document& doc,
    const std::vector<CompletionBackend*>& filter_models,
    const PromptTemplate& guess_template);

/// Candidates that survived filtering.
std::vector<CandidateToken> surviving(
    const std::vector<CandidateToken>& candidates);

/// True when the token is a closed-class stopword (checked on the ASCII
/// lowercased form).
bool is_stopword(std::string_view token);
/// True when every character is a letter (ASCII alpha or a UTF-8
/// continuation/lead byte).
bool is_alphabetic_word(std::string_view token);
/// True when the lowercase form belongs to the built-in common-word list
/// used by the person heuristic.
bool is_common_word(std::string_view token);

}  // namespace memprobe
