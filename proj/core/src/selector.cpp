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

#include "memprobe/selector.hpp"

#include <algorithm>
#include <cctype>

#include "memprobe/error.hpp"
#include "memprobe/probe.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

namespace {

// Closed-class words excluded by the content-word filter: determiners,
// pronouns, prepositions, conjunctions, auxiliaries and other function
// words. The filter errs toward exclusion; content words (nouns, verbs,
// adjectives, adverbs) are what the probes want.
const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> kSet = {
      "a", "an", "the", "this", "that", "these", "those", "some", "any",
      "each", "every", "no", "none", "all", "both", "either", "neither",
      "i", "me", "my", "mine", "myself", "we", "us", "our", "ours",
      "ourselves", "you", "your", "yours", "yourself", "yourselves", "he",
      "him", "his", "himself", "she", "her", "hers", "herself", "it", "its",
      "itself", "they", "them", "their", "theirs", "themselves", "who",
      "whom", "whose", "which", "what", "where", "when", "why", "how",
      "and", "or", "but", "nor", "so", "yet", "for", "because", "although",
      "though", "while", "whereas", "if", "unless", "until", "since", "as",
      "than", "whether", "once", "of", "in", "on", "at", "by", "to", "from",
      "with", "without", "about", "against", "between", "among", "through",
      "during", "before", "after", "above", "below", "under", "over",
      "into", "onto", "off", "out", "up", "down", "near", "across",
      "around", "behind", "beside", "beyond", "within", "upon", "toward",
      "towards", "be", "am", "is", "are", "was", "were", "been", "being",
      "have", "has", "had", "having", "do", "does", "did", "doing", "will",
      "would", "shall", "should", "can", "could", "may", "might", "must",
      "ought", "not", "there", "here", "then", "also", "too", "very",
      "just", "only", "such", "own", "same", "other", "another", "more",
      "most", "less", "least", "few", "fewer",
  };
  return kSet;
}

// Frequent English words (including sentence-initial and calendar words)
// used by the person-name heuristic to reject capitalized non-names.
const std::unordered_set<std::string>& common_word_set() {
  static const std::unordered_set<std::string> kSet = [] {
    std::unordered_set<std::string> set = stopword_set();
    const char* extra[] = {
        "mr", "mrs", "ms", "dr", "sir", "madam", "lady", "lord",
        "monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
        "sunday", "january", "february", "march", "april", "may", "june",
        "july", "august", "september", "october", "november", "december",
        "god", "oh", "ah", "well", "now", "today", "tomorrow",
        "yesterday", "yes", "okay", "ok", "hello", "hi", "however",
        "perhaps", "maybe", "still", "even", "again", "finally", "suddenly",
        "meanwhile", "instead", "indeed", "besides", "moreover", "anyway",
        "chapter", "book", "part", "section", "act", "scene", "north",
        "south", "east", "west", "new", "old", "good", "great", "little",
        "big", "long", "short", "high", "low", "first", "last", "next",
        "one", "two", "three", "four", "five", "six", "seven", "eight",
        "nine", "ten", "time", "day", "night", "year", "man", "woman",
        "people", "way", "thing",
    };
    for (const char* w : extra) {
      set.insert(w);
    }
    return set;
  }();
  return kSet;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool starts_capitalized(std::string_view s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s.front()));
}

CandidateToken make_candidate(const Document& doc, const TokenScore& score,
                              Strategy strategy) {
  CandidateToken c;
  c.doc_id = doc.id;
  c.position = score.position;
  c.surface = score.token;
  c.logprob = score.logprob;
  c.rank = score.rank;
  c.strategy = strategy;
  c.rank_is_lower_bound = score.rank_is_lower_bound;
  c.logprob_estimated = score.logprob_estimated;
  return c;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kProb:
      return "Prob";
    case Strategy::kRank:
      return "Rank";
    case Strategy::kPerson:
      return "Person";
    case Strategy::kInformativeWord:
      return "InformativeWord";
  }
  return "Prob";
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "Prob") return Strategy::kProb;
  if (name == "Rank") return Strategy::kRank;
  if (name == "Person") return Strategy::kPerson;
  if (name == "InformativeWord") return Strategy::kInformativeWord;
  throw ConfigError("unknown strategy: " + std::string(name));
}

void SelectionConfig::validate() const {
  if (max_candidates < 1) {
    throw ConfigError("max_candidates must be >= 1");
  }
  if (!std::isfinite(logprob_threshold)) {
    throw ConfigError("logprob_threshold must be finite");
  }
  if (min_matches_for_verdict > max_candidates) {
    throw ConfigError("min_matches_for_verdict cannot exceed max_candidates");
  }
}

bool is_stopword(std::string_view token) {
  return stopword_set().count(ascii_lower(token)) > 0;
}

bool is_common_word(std::string_view token) {
  return common_word_set().count(ascii_lower(token)) > 0;
}

bool is_alphabetic_word(std::string_view token) {
  if (token.empty()) {
    return false;
  }
  for (char c : token) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 128 && !std::isalpha(u)) {
      return false;
    }
  }
  return true;
}

std::vector<CandidateToken> select_candidates(
    const Document& doc, const std::vector<TokenScore>& scores,
    const SelectionConfig& cfg) {
  cfg.validate();
  if (cfg.strategy != Strategy::kProb && cfg.strategy != Strategy::kRank) {
    throw ConfigError(
        "select_candidates handles the Prob and Rank strategies only");
  }
  auto tokens = token_strings(doc.text);
  if (tokens.size() != scores.size()) {
    throw SchemaError("scores cover " + std::to_string(scores.size()) +
                      " positions but \"" + doc.id + "\" has " +
                      std::to_string(tokens.size()) + " tokens");
  }

  std::vector<const TokenScore*> qualifying;
  for (const TokenScore& s : scores) {
    // Position 0 has no left context under the forward n-gram, so its
    // surprisal is uninformative for the threshold strategies.
    if (s.position == 0) {
      continue;
    }
    if (cfg.content_word_filter &&
        (!is_alphabetic_word(s.token) || is_stopword(s.token))) {
      continue;
    }
    bool keep = cfg.strategy == Strategy::kProb
                    ? s.logprob < cfg.logprob_threshold
                    : s.rank > cfg.rank_threshold;
    if (keep) {
      qualifying.push_back(&s);
    }
  }

  if (qualifying.size() > cfg.max_candidates) {
    // Keep the most extreme scores; ties break toward earlier positions.
    std::sort(qualifying.begin(), qualifying.end(),
              [&cfg](const TokenScore* a, const TokenScore* b) {
                if (cfg.strategy == Strategy::kProb) {
                  if (a->logprob != b->logprob) {
                    return a->logprob < b->logprob;
                  }
                } else {
                  if (a->rank != b->rank) {
                    return a->rank > b->rank;
                  }
                }
                return a->position < b->position;
              });
    qualifying.resize(cfg.max_candidates);
    std::sort(qualifying.begin(), qualifying.end(),
              [](const TokenScore* a, const TokenScore* b) {
                return a->position < b->position;
              });
  }

  std::vector<CandidateToken> out;
  out.reserve(qualifying.size());
  for (const TokenScore* s : qualifying) {
    out.push_back(make_candidate(doc, *s, cfg.strategy));
  }
  return out;
}

HeuristicPersonDetector::HeuristicPersonDetector(PersonDetectorOptions options)
    : options_(options) {}

std::vector<CandidateToken> HeuristicPersonDetector::detect(
    const Document& doc) const {
  auto tokens = tokenize(doc.text);
  std::vector<CandidateToken> out;
  std::unordered_set<std::string> seen;
  bool sentence_start = true;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i].text;
    if (t.size() == 1 && is_ascii_punct(t[0])) {
      if (t == "." || t == "!" || t == "?") {
        sentence_start = true;
      }
      continue;
    }
    bool mid_sentence = !sentence_start;
    sentence_start = false;
    if (!mid_sentence || t.size() < 2) {
      continue;
    }
    if (!starts_capitalized(t) || !is_alphabetic_word(t)) {
      continue;
    }
    if (is_common_word(t)) {
      continue;
    }
    if (options_.gazetteer != nullptr && options_.gazetteer->count(t) == 0) {
      continue;
    }
    if (!seen.insert(t).second) {
      continue;  // one probe per distinct name, first occurrence
    }
    CandidateToken c;
    c.doc_id = doc.id;
    c.position = i;
    c.surface = t;
    c.strategy = Strategy::kPerson;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CandidateToken> detect_person_tokens(
    const Document& doc, const PersonDetectorOptions& options) {
  return HeuristicPersonDetector(options).detect(doc);
}

std::vector<CandidateToken> select_informative_words(
    const Document& doc, CompletionBackend& filter_model,
    const PromptTemplate& instruction, std::size_t max_candidates) {
  std::string response = filter_model.complete(instruction.render(doc.text));

  // Split the reply on commas, semicolons and newlines; trim whitespace and
  // wrapping punctuation from each piece.
  std::vector<std::string> words;
  std::string current;
  auto flush = [&]() {
    while (!current.empty() && is_ascii_space(current.front())) {
      current.erase(current.begin());
    }
    while (!current.empty() &&
           (is_ascii_space(current.back()) || current.back() == '.')) {
      current.pop_back();
    }
    if (!current.empty() && current.front() == '"' && current.back() == '"' &&
        current.size() >= 2) {
      current = current.substr(1, current.size() - 2);
    }
    if (!current.empty()) {
      words.push_back(current);
    }
    current.clear();
  };
  for (char c : response) {
    if (c == ',' || c == ';' || c == '\n') {
      flush();
    } else {
      current += c;
    }
  }
  flush();

  auto tokens = tokenize(doc.text);
  std::unordered_map<std::string, std::size_t> first_at;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    first_at.emplace(tokens[i].text, i);
  }

  std::vector<CandidateToken> out;
  std::unordered_set<std::string> taken;
  for (const std::string& w : words) {
    if (out.size() >= max_candidates) {
      break;
    }
    auto it = first_at.find(w);
    if (it == first_at.end() || !taken.insert(w).second) {
      continue;  // only words present verbatim in the document
    }
    CandidateToken c;
    c.doc_id = doc.id;
    c.position = it->second;
    c.surface = w;
    c.strategy = Strategy::kInformativeWord;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const CandidateToken& a, const CandidateToken& b) {
              return a.position < b.position;
            });
  return out;
}

std::vector<CandidateToken> apply_knowledge_filter(
    std::vector<CandidateToken> candidates, const Document& doc,
    const std::vector<CompletionBackend*>& filter_models,
    const PromptTemplate& guess_template) {
  std::vector<std::size_t> active;
  std::vector<std::string> prompts;
  std::vector<std::string> golds;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].filtered_out) {
      continue;
    }
    Probe probe = build_probe(doc, candidates[i], guess_template);
    active.push_back(i);
    prompts.push_back(std::move(probe.prompt));
    golds.push_back(std::move(probe.gold));
  }

  std::vector<std::vector<std::string>> guilty(candidates.size());
  std::vector<std::string> errors(candidates.size());
  for (CompletionBackend* filter : filter_models) {
    auto results = run_batch(*filter, prompts);
    for (std::size_t k = 0; k < active.size(); ++k) {
      CandidateToken& candidate = candidates[active[k]];
      if (results[k].errored) {
        // Never drop a candidate on a failed check.
        candidate.filter_error = true;
        if (!errors[active[k]].empty()) {
          errors[active[k]] += "; ";
        }
        errors[active[k]] +=
            "endpoint error from " + filter->name() + ": " + results[k].error;
        continue;
      }
      if (match_guess(parse_response(results[k].response), golds[k])) {
        candidate.filtered_out = true;
        guilty[active[k]].push_back(filter->name());
      }
    }
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::string reason;
    if (!guilty[i].empty()) {
      reason = "guessed by ";
      for (std::size_t g = 0; g < guilty[i].size(); ++g) {
        reason += (g > 0 ? ", " : "") + guilty[i][g];
      }
    }
    if (!errors[i].empty()) {
      reason += reason.empty() ? errors[i] : "; " + errors[i];
    }
    if (!reason.empty()) {
      candidates[i].filter_reason = reason;
    }
  }
  return candidates;
}

std::vector<CandidateToken> surviving(
    const std::vector<CandidateToken>& candidates) {
  std::vector<CandidateToken> out;
  out.reserve(candidates.size());
  for (const CandidateToken& c : candidates) {
    if (!c.filtered_out) {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace memprobe
