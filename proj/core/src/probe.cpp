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

#include "memprobe/probe.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "memprobe/error.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

std::string mask_token_at(const std::string& text, std::size_t position,
                          std::string* gold) {
  if (text.find(kMaskSentinel) != std::string::npos) {
    throw SchemaError("text already contains the mask sentinel");
  }
  auto tokens = tokenize(text);
  if (position >= tokens.size()) {
    throw SchemaError("mask position out of range");
  }
  const Token& t = tokens[position];
  if (gold) {
    *gold = t.text;
  }
  std::string masked;
  masked.reserve(text.size() + kMaskSentinel.size());
  masked.append(text, 0, t.offset);
  masked.append(kMaskSentinel);
  masked.append(text, t.offset + t.text.size(),
                text.size() - t.offset - t.text.size());
  return masked;
}

Probe build_probe(const Document& doc, const CandidateToken& candidate,
                  const PromptTemplate& tpl) {
  if (candidate.filtered_out) {
    throw SchemaError("candidate for \"" + doc.id +
                      "\" was filtered out and cannot be probed");
  }
  if (candidate.doc_id != doc.id) {
    throw SchemaError("candidate belongs to document \"" + candidate.doc_id +
                      "\", not \"" + doc.id + "\"");
  }
  std::string gold;
  std::string masked = mask_token_at(doc.text, candidate.position, &gold);
  if (gold != candidate.surface) {
    throw SchemaError("stale candidate: token at position " +
                      std::to_string(candidate.position) + " of \"" + doc.id +
                      "\" is \"" + gold + "\", expected \"" +
                      candidate.surface + "\"");
  }
  Probe probe;
  probe.doc_id = doc.id;
  probe.candidate = candidate;
  probe.masked_text = std::move(masked);
  probe.gold = std::move(gold);
  probe.prompt = tpl.render(probe.masked_text);
  probe.template_id = tpl.id();
  return probe;
}

std::string_view parse_path_name(ParsePath p) {
  switch (p) {
    case ParsePath::kTaggedWord:
      return "tagged_word";
    case ParsePath::kQuotedWord:
      return "quoted_word";
    case ParsePath::kLastWordHeuristic:
      return "last_word";
    case ParsePath::kUnparseable:
      return "unparseable";
  }
  return "unparseable";
}

namespace {

std::string first_word(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size() && is_ascii_space(s[begin])) {
    ++begin;
  }
  std::size_t end = begin;
  while (end < s.size() && !is_ascii_space(s[end])) {
    ++end;
  }
  return std::string(s.substr(begin, end - begin));
}

bool has_ascii_alpha(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  });
}

}  // namespace

ParsedGuess parse_response(std::string_view raw) {
  ParsedGuess parsed;
  parsed.raw_response = std::string(raw);

  // (1) First <word>...</word> span.
  constexpr std::string_view kOpen = "<word>";
  constexpr std::string_view kClose = "</word>";
  auto open = raw.find(kOpen);
  if (open != std::string_view::npos) {
    auto close = raw.find(kClose, open + kOpen.size());
    if (close != std::string_view::npos) {
      std::string word = first_word(
          raw.substr(open + kOpen.size(), close - open - kOpen.size()));
      if (!word.empty()) {
        parsed.guess = word;
        parsed.parse_path = ParsePath::kTaggedWord;
        return parsed;
      }
    }
  }

  // (2) First double-quoted single word.
  std::size_t q = 0;
  while ((q = raw.find('"', q)) != std::string_view::npos) {
    auto q2 = raw.find('"', q + 1);
    if (q2 == std::string_view::npos) {
      break;
    }
    std::string_view inner = raw.substr(q + 1, q2 - q - 1);
    if (!inner.empty() &&
        std::none_of(inner.begin(), inner.end(),
                     [](char c) { return is_ascii_space(c); })) {
      parsed.guess = std::string(inner);
      parsed.parse_path = ParsePath::kQuotedWord;
      return parsed;
    }
    q = q2 + 1;
  }

  // (3) Final alphabetic word, stripped of punctuation.
  auto words = whitespace_words(raw);
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    if (!has_ascii_alpha(it->text)) {
      continue;
    }
    std::string_view w = it->text;
    while (!w.empty() && !std::isalpha(static_cast<unsigned char>(w.front()))) {
      w.remove_prefix(1);
    }
    while (!w.empty() && !std::isalpha(static_cast<unsigned char>(w.back()))) {
      w.remove_suffix(1);
    }
    if (!w.empty()) {
      parsed.guess = std::string(w);
      parsed.parse_path = ParsePath::kLastWordHeuristic;
      return parsed;
    }
  }

  parsed.parse_path = ParsePath::kUnparseable;
  return parsed;
}

namespace {

// UTF-8 punctuation stripped alongside ASCII punctuation at token edges.
constexpr std::array<std::string_view, 10> kWidePunct = {
    "“", "”", "‘", "’", "–",
    "—", "…", "«", "»", " ",
};

// Length of a strippable punctuation run at the front of `s`, 0 if none.
std::size_t strippable_prefix(std::string_view s) {
  if (s.empty()) {
    return 0;
  }
  if (is_ascii_punct(s.front()) || is_ascii_space(s.front())) {
    return 1;
  }
  for (auto p : kWidePunct) {
    if (s.starts_with(p)) {
      return p.size();
    }
  }
  return 0;
}

std::size_t strippable_suffix(std::string_view s) {
  if (s.empty()) {
    return 0;
  }
  char back = s.back();
  if ((is_ascii_punct(back) || is_ascii_space(back))) {
    return 1;
  }
  for (auto p : kWidePunct) {
    if (s.ends_with(p)) {
      return p.size();
    }
  }
  return 0;
}

}  // namespace

std::string normalize_token(std::string_view token) {
  while (true) {
    std::size_t n = strippable_prefix(token);
    if (n == 0) {
      break;
    }
    token.remove_prefix(n);
  }
  while (true) {
    std::size_t n = strippable_suffix(token);
    if (n == 0) {
      break;
    }
    token.remove_suffix(n);
  }

  std::string out;
  out.reserve(token.size());
  bool pending_space = false;
  for (char c : token) {
    if (is_ascii_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool match_guess(const ParsedGuess& guess, std::string_view gold) {
  if (!guess.guess) {
    return false;
  }
  return normalize_token(*guess.guess) == normalize_token(gold);
}

}  // namespace memprobe
