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

#include "memprobe/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>

#include <doctest.h>

#include "memprobe/error.hpp"
#include "memprobe/tokenizer.hpp"
#include "support/test_helpers.hpp"

using namespace memprobe;

namespace {

Document doc_of(const std::string& id, const std::string& text) {
  return {id, text, std::nullopt, nlohmann::json::object()};
}

// Brute-force count table built independently of NGramModel: maps a context
// (joined by '\x01') to token counts.
struct CountOracle {
  std::map<std::string, std::map<std::string, int>> table;
  std::map<std::string, int> totals;
  std::size_t order;

  CountOracle(const std::vector<Document>& corpus, std::size_t order)
      : order(order) {
    for (const auto& doc : corpus) {
      auto tokens = token_strings(doc.text);
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        for (std::size_t len = 0; len <= std::min(order - 1, t); ++len) {
          std::string ctx;
          for (std::size_t i = t - len; i < t; ++i) {
            ctx += tokens[i];
            ctx += '\x01';
          }
          ++table[ctx][tokens[t]];
          ++totals[ctx];
        }
      }
    }
  }

  double probability(const std::vector<std::string>& context,
                     const std::string& token, double alpha,
                     std::size_t vocab_size) const {
    std::string ctx;
    std::size_t len = std::min(order - 1, context.size());
    for (std::size_t i = context.size() - len; i < context.size(); ++i) {
      ctx += context[i];
      ctx += '\x01';
    }
    double count = 0.0, total = 0.0;
    auto it = table.find(ctx);
    if (it != table.end()) {
      auto jt = it->second.find(token);
      if (jt != it->second.end()) {
        count = jt->second;
      }
      total = totals.at(ctx);
    }
    return (count + alpha) / (total + alpha * static_cast<double>(vocab_size));
  }
};

}  // namespace

TEST_CASE("unigram probabilities approach maximum likelihood as alpha -> 0") {
  auto model = train_ngram({doc_of("d", "a a b")}, 1, 1e-9);
  // Vocabulary is {<unk>, a, b}.
  CHECK(model.vocab().size() == 3);
  CHECK(model.probability({}, "a") == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(model.probability({}, "b") == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("distributions are normalized at every position") {
  std::mt19937_64 rng(17);
  Document doc = testing::random_document(rng, "d", 40, 40);
  auto model = train_ngram({doc, doc_of("x", "filler words here")}, 3, 0.5);
  auto tokens = token_strings(doc.text);
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    auto dist = model.position_distribution(tokens, pos);
    double sum = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      CHECK(dist.prob_at(i) >= 0.0);
      sum += dist.prob_at(i);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("trigram probabilities match the brute-force count oracle") {
  std::vector<Document> corpus = {
      doc_of("a", "the cat sat on the mat ."),
      doc_of("b", "the cat ran off the mat ."),
      doc_of("c", "a dog sat on a log ."),
      doc_of("d", "the dog and the cat sat still ."),
      doc_of("e", "on the mat the cat sat ."),
      doc_of("f", "the mat sat on the cat ."),
      doc_of("g", "a cat and a dog ran ."),
  };
  double alpha = 0.25;
  auto model = train_ngram(corpus, 3, alpha);
  CountOracle oracle(corpus, 3);

  for (const auto& doc : corpus) {
    auto tokens = token_strings(doc.text);
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      std::vector<std::string> context(tokens.begin(),
                                       tokens.begin() + pos);
      double expected =
          oracle.probability(context, tokens[pos], alpha, model.vocab().size());
      CHECK(model.probability(context, tokens[pos]) ==
            doctest::Approx(expected).epsilon(1e-12));
      auto dist = model.position_distribution(tokens, pos);
      auto idx = dist.index_of(tokens[pos]);
      REQUIRE(idx.has_value());
      CHECK(dist.prob_at(*idx) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("unigram model yields the corpus distribution at any position") {
  auto model = train_ngram({doc_of("d", "a a b c")}, 1, 0.1);
  std::vector<std::string> tokens = {"b", "a", "c", "a"};
  auto d0 = model.position_distribution(tokens, 0);
  auto d3 = model.position_distribution(tokens, 3);
  REQUIRE(d0.size() == d3.size());
  for (std::size_t i = 0; i < d0.size(); ++i) {
    CHECK(d0.prob_at(i) == d3.prob_at(i));
  }
}

TEST_CASE("score_document ranks count strictly greater alternatives") {
  testing::TableScorer scorer({"a", "b", "c"}, {{0.5, 0.3, 0.2}});
  Document doc = doc_of("d", "c a b");
  auto scores = score_document(scorer, doc);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].token == "c");
  CHECK(scores[0].rank == 2);
  CHECK(scores[0].logprob == doctest::Approx(std::log(0.2)).epsilon(1e-12));
  CHECK(scores[1].rank == 0);  // argmax token has rank 0
  CHECK(scores[2].rank == 1);
}

TEST_CASE("tied probabilities do not increase rank") {
  testing::TableScorer scorer({"a", "b", "c", "d"}, {{0.4, 0.2, 0.2, 0.2}});
  auto scores = score_tokens(scorer, {"b"});
  CHECK(scores[0].rank == 1);  // only "a" is strictly greater
}

TEST_CASE("uniform distribution scores -ln|V| everywhere") {
  auto scorer = testing::uniform_scorer(4);
  auto scores = score_tokens(scorer, {"t0", "t3", "t2"});
  for (const auto& s : scores) {
    CHECK(s.logprob == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
    CHECK(s.rank == 0);
  }
}

TEST_CASE("perplexity identities") {
  auto uniform = testing::uniform_scorer(4);
  Document doc = doc_of("d", "t0 t1 t2 t3 t1");
  CHECK(perplexity(uniform, doc) == doctest::Approx(4.0).epsilon(1e-9));

  testing::TableScorer certain({"sure"}, {{1.0}});
  CHECK(perplexity(certain, doc_of("one", "sure")) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perplexity equals exp of negated mean score_document logprob") {
  std::mt19937_64 rng(5);
  Document doc = testing::random_document(rng, "d", 20, 30);
  auto model = train_ngram(
      {doc, doc_of("other", "spare words for the vocabulary .")}, 2, 0.3);
  auto scores = score_document(model, doc);
  double mean = 0.0;
  for (const auto& s : scores) {
    mean += s.logprob;
  }
  mean /= static_cast<double>(scores.size());
  CHECK(perplexity(model, doc) ==
        doctest::Approx(std::exp(-mean)).epsilon(1e-9));
}

TEST_CASE("training count increments never decrease the probability") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Document> corpus;
    for (int d = 0; d < 6; ++d) {
      corpus.push_back(testing::random_document(
          rng, "d" + std::to_string(d), 10, 25));
    }
    auto tokens = token_strings(corpus[0].text);
    if (tokens.size() < 3) {
      continue;
    }
    std::size_t pos = 2 + rng() % (tokens.size() - 2);
    std::vector<std::string> context = {tokens[pos - 2], tokens[pos - 1]};
    std::string target = tokens[pos];

    auto before = train_ngram(corpus, 3, 0.2);
    double p_before = before.probability(context, target);
    // One extra observation of exactly this trigram, no new vocabulary.
    corpus.push_back(
        doc_of("extra", context[0] + " " + context[1] + " " + target));
    auto after = train_ngram(corpus, 3, 0.2);
    double p_after = after.probability(context, target);
    CHECK(p_after >= p_before - 1e-12);
  }
}

TEST_CASE("scoring is deterministic bit for bit") {
  std::mt19937_64 rng(31);
  Document doc = testing::random_document(rng, "d", 30, 40);
  auto model = train_ngram({doc}, 3, 0.7);
  auto s1 = score_document(model, doc);
  auto s2 = score_document(model, doc);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(std::memcmp(&s1[i].logprob, &s2[i].logprob, sizeof(double)) == 0);
    CHECK(s1[i].rank == s2[i].rank);
  }
}

TEST_CASE("rank and sorted distribution are consistent") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 2 + rng() % 30;
    std::vector<double> probs(n);
    double sum = 0.0;
    for (auto& p : probs) {
      p = 1 + rng() % 1000;
      sum += p;
    }
    for (auto& p : probs) {
      p /= sum;
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
      names.push_back("w" + std::to_string(i));
    }
    testing::TableScorer scorer(names, {probs});
    std::size_t pick = rng() % n;
    auto scores = score_tokens(scorer, {names[pick]});

    std::vector<double> sorted = probs;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    auto at_rank = std::find(sorted.begin(), sorted.end(), probs[pick]);
    // Sorting descending places the token at an index >= its rank, equal
    // when there are no ties.
    CHECK(static_cast<std::size_t>(at_rank - sorted.begin()) ==
          scores[0].rank);
  }
}

TEST_CASE("train_ngram validates inputs") {
  CHECK_THROWS_AS(train_ngram({}, 2, 0.1), ConfigError);
  CHECK_THROWS_AS(train_ngram({doc_of("d", "a b")}, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(train_ngram({doc_of("d", "a b")}, 6, 0.1), ConfigError);
  CHECK_THROWS_AS(train_ngram({doc_of("d", "a b")}, 2, 0.0), ConfigError);
}

TEST_CASE("out-of-range positions and empty documents are rejected") {
  auto model = train_ngram({doc_of("d", "a b c")}, 2, 0.1);
  std::vector<std::string> tokens = {"a"};
  CHECK_THROWS_AS(model.position_distribution(tokens, 1), SchemaError);
  CHECK_THROWS_AS(score_document(model, doc_of("e", "   ")), SchemaError);
}
