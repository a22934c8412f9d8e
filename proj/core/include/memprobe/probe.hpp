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

#include "memprobe/corpus.hpp"
#include "memprobe/prompt.hpp"
#include "memprobe/selector.hpp"

namespace memprobe {

/// The literal six bytes spliced over a masked token.
inline constexpr std::string_view kMaskSentinel = "[MASK]";

/// A cloze probe: the document with exactly one token replaced by [MASK],
/// plus the fully rendered prompt. Replacing the sentinel with `gold`
/// reproduces the original text byte-for-byte.
struct Probe {
  std::string doc_id;
  CandidateToken candidate;
  std::string masked_text;
  std::string gold;
  std::string prompt;
  std::string template_id;
};

/// Splices [MASK] over the token at `position` using byte offsets into the
/// original text. Throws SchemaError if the position is out of range or the
/// text already contains the sentinel.
std::string mask_token_at(const std::string& text, std::size_t position,
                          std::string* gold = nullptr);

/// Builds the probe for `candidate`. Verifies the candidate still matches
/// the document (same surface at the same position) and that it was not
/// filtered out.
Probe build_probe(const Document& doc, const CandidateToken& candidate,
                  const PromptTemplate& tpl);

enum class ParsePath { kTaggedWord, kQuotedWord, kLastWordHeuristic, kUnparseable };

std::string_view parse_path_name(ParsePath p);

/// A target model response reduced to a single guessed token. `guess` is
/// present iff the parse succeeded.
struct ParsedGuess {
  std::string raw_response;
  std::optional<std::string> guess;
  ParsePath parse_path = ParsePath::kUnparseable;
};

/// Parse order: (1) first <word>...</word> span, (2) first double-quoted
/// single word, (3) final alphabetic word stripped of punctuation,
/// (4) Unparseable. Never throws.
ParsedGuess parse_response(std::string_view raw);

/// Casefolds ASCII letters, strips leading/trailing punctuation (including
/// common UTF-8 quotes and dashes), and collapses internal whitespace runs
/// to a single space. Idempotent; no stemming.
std::string normalize_token(std::string_view token);

/// True iff the guess parsed and normalize(guess) == normalize(gold).
bool match_guess(const ParsedGuess& guess, std::string_view gold);

}  // namespace memprobe
