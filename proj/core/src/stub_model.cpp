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

#include "memprobe/stub_model.hpp"

#include <algorithm>
#include <cmath>

#include "memprobe/error.hpp"
#include "memprobe/probe.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

namespace {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t hash = 14695981039346656037ull ^ seed;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string tagged(std::string_view word) {
  std::string out;
  out.reserve(word.size() + 13);
  out += "<word>";
  out += word;
  out += "</word>";
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string key;
  for (const auto& t : tokens) {
    key += t;
    key += '\x1f';
  }
  return key;
}

}  // namespace

StubModel::StubModel(std::shared_ptr<const NGramModel> base,
                     std::shared_ptr<const TemplateRegistry> templates)
    : StubModel(std::move(base), std::move(templates), Options{}) {}

StubModel::StubModel(std::shared_ptr<const NGramModel> base,
                     std::shared_ptr<const TemplateRegistry> templates,
                     Options options)
    : base_(std::move(base)),
      templates_(std::move(templates)),
      options_(options) {
  if (!base_) {
    throw ConfigError("stub model requires a base n-gram model");
  }
  if (!templates_) {
    throw ConfigError("stub model requires a template registry");
  }
  if (options_.recall_probability < 0.0 || options_.recall_probability > 1.0) {
    throw ConfigError("recall_probability must lie in [0,1]");
  }
}

bool StubModel::knows(const std::string& doc_id) const {
  return by_id_.find(doc_id) != by_id_.end();
}

bool StubModel::recall_coin(const std::string& prompt) const {
  if (options_.recall_probability >= 1.0) {
    return true;
  }
  if (options_.recall_probability <= 0.0) {
    return false;
  }
  std::uint64_t h = fnv1a64(prompt, options_.seed * 0x9e3779b97f4a7c15ull);
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < options_.recall_probability;
}

std::string StubModel::complete(const std::string& prompt) {
  return answer(prompt);
}

std::string StubModel::answer(const std::string& prompt) const {
  // Identify which shipped template produced this prompt; its placeholder
  // position tells us where the caller's input sits.
  for (const PromptTemplate& tpl : templates_->all()) {
    std::string input;
    if (!tpl.extract_input(prompt, &input)) {
      continue;
    }
    if (tpl.id() == template_name(TemplateId::kPrefixFiction) ||
        tpl.id() == template_name(TemplateId::kPrefixNews)) {
      return complete_prefix(input, prompt);
    }
    if (tpl.id() == template_name(TemplateId::kInformativeWords)) {
      // Rarest-first informative words by base unigram count.
      auto tokens = token_strings(input);
      std::vector<std::pair<double, std::string>> rarity;
      std::vector<std::string> no_context;
      for (const auto& t : tokens) {
        if (std::find_if(rarity.begin(), rarity.end(),
                         [&](const auto& p) { return p.second == t; }) ==
            rarity.end()) {
          rarity.emplace_back(base_->probability(no_context, t), t);
        }
      }
      std::stable_sort(rarity.begin(), rarity.end(),
                       [](const auto& a, const auto& b) {
                         return a.first < b.first;
                       });
      std::string out;
      for (std::size_t i = 0; i < rarity.size() && i < 10; ++i) {
        if (!out.empty()) {
          out += ", ";
        }
        out += rarity[i].second;
      }
      return out;
    }
    return complete_cloze(input, prompt);
  }
  // Unknown prompt shape: free generation from the prompt tail.
  return generate_from(token_strings(prompt), 16);
}

std::string StubModel::complete_cloze(const std::string& masked_text,
                                      const std::string& prompt) const {
  auto it = cloze_index_.find(masked_text);
  if (it != cloze_index_.end() && recall_coin(prompt)) {
    return tagged(it->second.gold);
  }

  auto mask_at = masked_text.find(kMaskSentinel);
  if (mask_at == std::string::npos) {
    return generate_from(token_strings(masked_text), 16);
  }
  auto context = token_strings(masked_text.substr(0, mask_at));
  std::uint32_t id = base_->argmax_id(context);
  return tagged(base_->vocab().token(id));
}

std::string StubModel::complete_prefix(const std::string& prefix,
                                       const std::string& prompt) const {
  for (const MemorizedDoc& doc : memorized_) {
    if (doc.text.size() > prefix.size() &&
        doc.text.compare(0, prefix.size(), prefix) == 0) {
      if (recall_coin(prompt)) {
        return doc.text.substr(prefix.size());
      }
      break;  // memorized but recall failed: behave like the base model
    }
  }
  return generate_from(token_strings(prefix), options_.continuation_tokens);
}

std::string StubModel::generate_from(const std::vector<std::string>& context,
                                     std::size_t n_tokens) const {
  std::vector<std::string> window = context;
  std::vector<std::string> generated;
  generated.reserve(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) {
    std::uint32_t id = base_->argmax_id(window);
    const std::string& token = base_->vocab().token(id);
    generated.push_back(token);
    window.push_back(token);
  }
  return detokenize(generated);
}

PositionDistribution StubModel::position_distribution(
    const std::vector<std::string>& tokens, std::size_t position) const {
  PositionDistribution base_dist =
      base_->position_distribution(tokens, position);

  auto it = by_token_key_.find(join_tokens(tokens));
  if (it == by_token_key_.end()) {
    return base_dist;
  }
  // Memorized document: verbatim recall concentrates `recall_probability`
  // of the mass on the true token and scales the base distribution into the
  // remainder, which keeps the vector normalized.
  const MemorizedDoc& doc = memorized_[it->second];
  double recall = options_.recall_probability;
  std::vector<double> probs = base_dist.probs();
  for (double& p : probs) {
    p *= (1.0 - recall);
  }
  std::uint32_t gold_id =
      base_->vocab().id_or_unknown(doc.tokens[position]);
  probs[gold_id] += recall;
  return PositionDistribution::over_vocab(&base_->vocab(), std::move(probs));
}

StubModel contaminate(const StubModel& stub,
                      const std::vector<Document>& docs) {
  StubModel next = stub;
  for (const Document& doc : docs) {
    if (next.by_id_.find(doc.id) != next.by_id_.end()) {
      continue;  // idempotent per document
    }
    StubModel::MemorizedDoc entry;
    entry.id = doc.id;
    entry.text = doc.text;
    entry.tokens = token_strings(doc.text);
    if (entry.tokens.empty()) {
      throw SchemaError("document \"" + doc.id +
                        "\" tokenizes to nothing and cannot be memorized");
    }
    std::size_t index = next.memorized_.size();
    for (std::size_t pos = 0; pos < entry.tokens.size(); ++pos) {
      std::string gold;
      std::string masked = mask_token_at(doc.text, pos, &gold);
      next.cloze_index_[masked] = {doc.id, gold};
    }
    next.by_token_key_[join_tokens(entry.tokens)] = index;
    next.by_id_[doc.id] = index;
    next.memorized_.push_back(std::move(entry));
  }
  return next;
}

}  // namespace memprobe
