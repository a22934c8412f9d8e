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

#include "memprobe/tokenizer.hpp"

#include <cctype>
#include <cstring>

namespace memprobe {

bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

bool is_ascii_space(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::isspace(u) != 0;
}

namespace {

// Emits the tokens of one whitespace-free chunk starting at byte `base`.
void emit_chunk(std::string_view chunk, std::size_t base,
                std::vector<Token>& out) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();

  while (begin < end && is_ascii_punct(chunk[begin])) {
    out.push_back({std::string(1, chunk[begin]), base + begin});
    ++begin;
  }

  std::size_t core_end = end;
  while (core_end > begin && is_ascii_punct(chunk[core_end - 1])) {
    --core_end;
  }

  if (core_end > begin) {
    out.push_back(
        {std::string(chunk.substr(begin, core_end - begin)), base + begin});
  }
  for (std::size_t i = core_end; i < end; ++i) {
    out.push_back({std::string(1, chunk[i]), base + i});
  }
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && !is_ascii_space(text[i])) {
      ++i;
    }
    emit_chunk(text.substr(start, i - start), start, out);
  }
  return out;
}

std::vector<std::string> token_strings(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    out.push_back(t.text);
  }
  return out;
}

std::vector<std::string> token_strings(std::string_view text) {
  return token_strings(tokenize(text));
}

std::string detokenize(std::span<const std::string> tokens) {
  static const char* kNoSpaceBefore = ".,;:!?)]}%";
  static const char* kNoSpaceAfter = "([{";

  std::string out;
  bool suppress_space = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    bool closing =
        t.size() == 1 && std::strchr(kNoSpaceBefore, t[0]) != nullptr;
    if (!out.empty() && !closing && !suppress_space) {
      out += ' ';
    }
    out += t;
    suppress_space =
        t.size() == 1 && std::strchr(kNoSpaceAfter, t[0]) != nullptr;
  }
  return out;
}

std::vector<Token> whitespace_words(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && !is_ascii_space(text[i])) {
      ++i;
    }
    out.push_back({std::string(text.substr(start, i - start)), start});
  }
  return out;
}

}  // namespace memprobe
