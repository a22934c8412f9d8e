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

#include <random>

#include <doctest.h>

#include "memprobe/error.hpp"
#include "memprobe/tokenizer.hpp"
#include "support/test_helpers.hpp"

using namespace memprobe;

namespace {

PromptTemplate passthrough_template() {
  return PromptTemplate("passthrough", "{input}");
}

CandidateToken candidate_at(const Document& doc, std::size_t position) {
  auto tokens = tokenize(doc.text);
  CandidateToken c;
  c.doc_id = doc.id;
  c.position = position;
  c.surface = tokens.at(position).text;
  c.strategy = Strategy::kProb;
  return c;
}

std::string replace_mask(const std::string& masked, const std::string& gold) {
  auto at = masked.find(kMaskSentinel);
  REQUIRE(at != std::string::npos);
  std::string out = masked;
  out.replace(at, kMaskSentinel.size(), gold);
  return out;
}

std::size_t count_masks(const std::string& s) {
  std::size_t count = 0, at = 0;
  while ((at = s.find(kMaskSentinel, at)) != std::string::npos) {
    ++count;
    at += kMaskSentinel.size();
  }
  return count;
}

}  // namespace

TEST_CASE("build_probe masks exactly the candidate occurrence") {
  Document doc{"out", "Stay gold, Ponyboy, stay gold.", std::nullopt,
               nlohmann::json::object()};
  auto probe =
      build_probe(doc, candidate_at(doc, 3), passthrough_template());
  CHECK(probe.masked_text == "Stay gold, [MASK], stay gold.");
  CHECK(probe.gold == "Ponyboy");
  CHECK(replace_mask(probe.masked_text, probe.gold) == doc.text);
}

TEST_CASE("masking a repeated surface touches only the chosen position") {
  Document doc{"rep", "stay gold, stay gold, stay gold", std::nullopt,
               nlohmann::json::object()};
  auto probe =
      build_probe(doc, candidate_at(doc, 3), passthrough_template());
  CHECK(probe.masked_text == "stay gold, [MASK] gold, stay gold");
}

TEST_CASE("probe invariants hold on generated documents") {
  std::mt19937_64 rng(2024);
  PromptTemplate tpl = passthrough_template();
  for (int i = 0; i < 100; ++i) {
    Document doc =
        testing::random_document(rng, "doc" + std::to_string(i));
    auto tokens = tokenize(doc.text);
    std::size_t position = rng() % tokens.size();
    auto probe = build_probe(doc, candidate_at(doc, position), tpl);
    CHECK(count_masks(probe.masked_text) == 1);
    CHECK(replace_mask(probe.masked_text, probe.gold) == doc.text);
  }
}

TEST_CASE("build_probe rejects stale and filtered candidates") {
  Document doc{"d", "one two three", std::nullopt, nlohmann::json::object()};
  auto stale = candidate_at(doc, 1);
  stale.surface = "previously";
  CHECK_THROWS_WITH_AS(build_probe(doc, stale, passthrough_template()),
                       doctest::Contains("stale"), SchemaError);

  auto filtered = candidate_at(doc, 1);
  filtered.filtered_out = true;
  CHECK_THROWS_AS(build_probe(doc, filtered, passthrough_template()),
                  SchemaError);

  auto out_of_range = candidate_at(doc, 1);
  out_of_range.position = 99;
  CHECK_THROWS_AS(build_probe(doc, out_of_range, passthrough_template()),
                  SchemaError);
}

TEST_CASE("documents already containing the sentinel are rejected") {
  Document doc{"d", "weird [MASK] input", std::nullopt,
               nlohmann::json::object()};
  CHECK_THROWS_AS(mask_token_at(doc.text, 0), SchemaError);
}

TEST_CASE("parse_response takes the first tagged word") {
  auto p = parse_response("Output: <word>Wemmick</word>");
  CHECK(p.parse_path == ParsePath::kTaggedWord);
  CHECK(p.guess == "Wemmick");

  auto multi = parse_response("<word>Great Expectations</word>");
  CHECK(multi.parse_path == ParsePath::kTaggedWord);
  CHECK(multi.guess == "Great");
}

TEST_CASE("parse_response falls back to the first quoted single word") {
  auto p = parse_response(
      "I believe the word that fills in the [MASK] token in the passage is "
      "\"Arthur.\"");
  CHECK(p.parse_path == ParsePath::kQuotedWord);
  CHECK(p.guess == "Arthur.");
}

TEST_CASE("parse_response falls back to the final alphabetic word") {
  auto p = parse_response("The masked token is probably Melkor.");
  CHECK(p.parse_path == ParsePath::kLastWordHeuristic);
  CHECK(p.guess == "Melkor");

  auto trailing = parse_response("answer: 42 gold!!");
  CHECK(trailing.guess == "gold");
}

TEST_CASE("parse_response yields Unparseable only for content-free input") {
  for (const char* s : {"", "   ", "\n\t", "12 34 !!"}) {
    auto p = parse_response(s);
    CHECK(p.parse_path == ParsePath::kUnparseable);
    CHECK_FALSE(p.guess.has_value());
  }
}

TEST_CASE("parse_response never throws on adversarial input") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    std::string s;
    std::size_t len = rng() % 80;
    for (std::size_t j = 0; j < len; ++j) {
      s += static_cast<char>(rng() % 256);
    }
    CHECK_NOTHROW(parse_response(s));
  }
  CHECK_NOTHROW(parse_response("<word></word>"));
  CHECK_NOTHROW(parse_response("<word>"));
  CHECK_NOTHROW(parse_response("\"\""));
}

TEST_CASE("normalize_token strips punctuation and casefolds") {
  CHECK(normalize_token("Arthur.") == "arthur");
  CHECK(normalize_token("  HCL ") == "hcl");
  CHECK(normalize_token("“Ponyboy”") == "ponyboy");
  CHECK(normalize_token("cash-book") == "cash-book");
  CHECK(normalize_token("two  words") == "two words");
  CHECK(normalize_token("...") == "");
}

TEST_CASE("normalize_token is idempotent") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    std::size_t len = rng() % 24;
    for (std::size_t j = 0; j < len; ++j) {
      s += static_cast<char>(32 + rng() % 96);
    }
    std::string once = normalize_token(s);
    CHECK(normalize_token(once) == once);
  }
}

TEST_CASE("match_guess applies normalization and rejects Unparseable") {
  ParsedGuess melkor{"", std::string("Melkor"), ParsePath::kTaggedWord};
  CHECK(match_guess(melkor, "Melkor"));
  ParsedGuess dotted{"", std::string("melkor."), ParsePath::kQuotedWord};
  CHECK(match_guess(dotted, "Melkor"));
  ParsedGuess unparsed{"", std::nullopt, ParsePath::kUnparseable};
  CHECK_FALSE(match_guess(unparsed, "anything"));
  ParsedGuess wrong{"", std::string("Sauron"), ParsePath::kTaggedWord};
  CHECK_FALSE(match_guess(wrong, "Melkor"));
}

TEST_CASE("match_guess is symmetric under normalization") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::string a = testing::pseudo_word(rng, 1 + rng() % 3);
    std::string b = rng() % 2 ? a + "." : testing::pseudo_word(rng, 2);
    ParsedGuess ga{"", a, ParsePath::kTaggedWord};
    ParsedGuess gb{"", b, ParsePath::kTaggedWord};
    CHECK(match_guess(ga, b) == match_guess(gb, a));
  }
}
