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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memprobe {

/// One token plus the byte offset of its first character in the source
/// string. Offsets let callers splice the original text (e.g. to mask a
/// token) without losing a single byte.
struct Token {
  std::string text;
  std::size_t offset = 0;
};

/// Word-level tokenizer: splits on ASCII whitespace, then peels leading and
/// trailing ASCII punctuation off each chunk into single-character tokens.
/// Interior punctuation ("cash-book", "don't") stays attached. Bytes >= 0x80
/// are treated as word characters, so UTF-8 sequences survive untouched.
/// Empty input yields an empty list.
std::vector<Token> tokenize(std::string_view text);

/// Just the token strings, in order.
std::vector<std::string> token_strings(std::string_view text);
std::vector<std::string> token_strings(const std::vector<Token>& tokens);

/// Joins tokens with single spaces, attaching closing punctuation to the
/// previous token and opening punctuation to the next. The result equals the
/// source up to whitespace placement; all non-whitespace characters are
/// preserved.
std::string detokenize(std::span<const std::string> tokens);

/// Whitespace-delimited words with byte offsets. No punctuation handling;
/// used for prefix probing and word-level LCS.
std::vector<Token> whitespace_words(std::string_view text);

bool is_ascii_punct(char c);
bool is_ascii_space(char c);

}  // namespace memprobe
