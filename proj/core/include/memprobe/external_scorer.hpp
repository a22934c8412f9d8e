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

#include <memory>
#include <string>

#include "memprobe/scorer.hpp"
#include "memprobe/target.hpp"

namespace memprobe {

/// HTTP adapter for plugging in an external reference model (e.g. a masked
/// LM served behind a small shim). Wire contract:
///
///   POST {"tokens": [...], "position": k}
///   ->   {"logprobs": {"token": logprob, ...}}
///
/// over the model's vocabulary or a top-N truncation. For truncated
/// responses, ranks beyond the returned depth are reported as lower bounds
/// (">= N") and missing logprobs as flagged estimates.
class ExternalScorer final : public TokenScorer {
 public:
  struct Config {
    std::string url;
    // Expected truncation depth, 0 when the server returns the full
    // vocabulary. Responses whose probabilities sum to less than 1 are
    // treated as truncated regardless.
    std::size_t top_n = 0;
    int timeout_sec = 120;
  };

  explicit ExternalScorer(Config config,
                          std::unique_ptr<HttpTransport> transport = nullptr);

  PositionDistribution position_distribution(
      const std::vector<std::string>& tokens,
      std::size_t position) const override;

 private:
  Config config_;
  std::unique_ptr<HttpTransport> transport_;
};

}  // namespace memprobe
