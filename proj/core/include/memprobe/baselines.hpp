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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memprobe/corpus.hpp"
#include "memprobe/prompt.hpp"
#include "memprobe/scorer.hpp"
#include "memprobe/target.hpp"

namespace memprobe {

/// Longest common subsequence length over integer id sequences: the
/// dynamic program shared by every LCS entry point.
std::size_t lcs_ids(std::span<const std::uint32_t> a,
                    std::span<const std::uint32_t> b);

/// Word-level longest common subsequence length over normalized words
/// (casefolded, punctuation-stripped; words that normalize to nothing are
/// dropped). Normalized words are interned to ids and scored with lcs_ids.
std::size_t lcs_words(std::span<const std::string> a,
                      std::span<const std::string> b);

struct PrefixProbeResult {
  std::string doc_id;
  std::string prefix;
  std::string generation;
  std::string reference_suffix;
  std::size_t lcs_words = 0;
  bool skipped = false;
  std::string skip_reason;
  bool errored = false;
  std::string error;
};

/// Prompts the target with the instruction plus the document's first
/// `n_words` whitespace words and scores the continuation against the true
/// suffix with word-level LCS. Documents of `n_words` or fewer words are
/// skipped with a reason.
PrefixProbeResult prefix_probe(const Document& doc, CompletionBackend& target,
                               const PromptTemplate& tpl,
                               std::size_t n_words = 50);

enum class MiaMethod { kPpl, kPplCompression, kMinK };

std::string_view mia_method_name(MiaMethod m);

struct MIAScore {
  std::string doc_id;
  MiaMethod method = MiaMethod::kPpl;
  std::optional<int> k_percent;  // present iff method == kMinK
  double score = 0.0;
};

/// Mean of the lowest ceil(k_percent/100 * n) token log-probabilities.
double min_k_score(std::span<const double> logprobs, double k_percent);

/// Compressed byte length of `text` under raw DEFLATE (RFC 1951), default
/// zlib settings.
std::size_t deflate_bytes(std::string_view text);

/// Token-probability membership-inference scores for one document:
/// PPL = exp(-mean logprob); PPL/compression = mean negative logprob divided
/// by the DEFLATE-compressed byte length; Min-K% for k in {5,10,20,30,40}.
/// Lower PPL and PPL/compression indicate membership; for Min-K the fitted
/// threshold orientation decides. Requires exact token probabilities: a
/// scorer returning estimated logprobs (truncated top-N) is rejected.
std::vector<MIAScore> mia_scores(const Document& doc,
                                 const TokenScorer& scorer);

/// One-dimensional threshold classifier: predicts positive when the score
/// is >= (kGe) or <= (kLe) the threshold.
struct ThresholdClassifier {
  enum class Direction { kGe, kLe };
  double threshold = 0.0;
  Direction direction = Direction::kGe;
  double beta = 0.1;
  double validation_f_beta = 0.0;

  bool predict(double score) const;
  nlohmann::json to_json() const;
  static ThresholdClassifier from_json(const nlohmann::json& j);
};

/// Sweeps every midpoint between sorted distinct scores (plus the two
/// all-positive / all-negative extremes) in both orientations and returns
/// the classifier maximizing F_beta on the given (score, label) points.
/// Ties resolve to the lowest threshold, >= orientation first. Both classes
/// must be present.
ThresholdClassifier fit_threshold(
    std::span<const std::pair<double, int>> scored, double beta);

}  // namespace memprobe
