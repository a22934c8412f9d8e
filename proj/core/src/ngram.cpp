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

#include <cstring>

#include "memprobe/error.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

namespace {

std::string pack_ids(const std::uint32_t* ids, std::size_t n) {
  std::string key(n * sizeof(std::uint32_t), '\0');
  std::memcpy(key.data(), ids, n * sizeof(std::uint32_t));
  return key;
}

}  // namespace

Vocab::Vocab() { add(kUnknown); }

std::uint32_t Vocab::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) {
    return it->second;
  }
  auto id = static_cast<std::uint32_t>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

bool Vocab::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

std::uint32_t Vocab::id_or_unknown(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 0u : it->second;
}

std::vector<std::uint32_t> NGramModel::context_ids(
    const std::vector<std::string>& tokens, std::size_t position) const {
  std::size_t len = std::min(order_ - 1, position);
  std::vector<std::uint32_t> ctx;
  ctx.reserve(len);
  for (std::size_t i = position - len; i < position; ++i) {
    ctx.push_back(vocab_.id_or_unknown(tokens[i]));
  }
  return ctx;
}

const NGramModel::ContextCounts* NGramModel::lookup(
    const std::vector<std::uint32_t>& ctx) const {
  const auto& level = levels_[ctx.size()];
  auto it = level.find(pack_ids(ctx.data(), ctx.size()));
  return it == level.end() ? nullptr : &it->second;
}

PositionDistribution NGramModel::position_distribution(
    const std::vector<std::string>& tokens, std::size_t position) const {
  if (position >= tokens.size()) {
    throw SchemaError("position out of range for distribution");
  }
  auto ctx = context_ids(tokens, position);
  const ContextCounts* counts = lookup(ctx);

  const std::size_t v = vocab_.size();
  const double denom =
      (counts ? static_cast<double>(counts->total) : 0.0) +
      alpha_ * static_cast<double>(v);
  std::vector<double> probs(v, alpha_ / denom);
  if (counts) {
    for (const auto& [token_id, count] : counts->by_token) {
      probs[token_id] = (static_cast<double>(count) + alpha_) / denom;
    }
  }
  return PositionDistribution::over_vocab(&vocab_, std::move(probs));
}

double NGramModel::probability(const std::vector<std::string>& context,
                               std::string_view token) const {
  std::size_t len = std::min(order_ - 1, context.size());
  std::vector<std::uint32_t> ctx;
  ctx.reserve(len);
  for (std::size_t i = context.size() - len; i < context.size(); ++i) {
    ctx.push_back(vocab_.id_or_unknown(context[i]));
  }
  const ContextCounts* counts = lookup(ctx);
  const double denom = (counts ? static_cast<double>(counts->total) : 0.0) +
                       alpha_ * static_cast<double>(vocab_.size());
  double count = 0.0;
  if (counts) {
    auto it = counts->by_token.find(vocab_.id_or_unknown(token));
    if (it != counts->by_token.end()) {
      count = static_cast<double>(it->second);
    }
  }
  return (count + alpha_) / denom;
}

std::uint32_t NGramModel::argmax_id(
    const std::vector<std::string>& context) const {
  std::size_t len = std::min(order_ - 1, context.size());
  std::vector<std::uint32_t> ctx;
  ctx.reserve(len);
  for (std::size_t i = context.size() - len; i < context.size(); ++i) {
    ctx.push_back(vocab_.id_or_unknown(context[i]));
  }
  const ContextCounts* counts = lookup(ctx);
  // Skip the reserved unknown entry: it never carries training mass and a
  // stub answering "<unk>" would be useless.
  std::uint32_t best = vocab_.size() > 1 ? 1u : 0u;
  if (!counts) {
    return best;
  }
  std::uint32_t best_count = 0;
  for (const auto& [token_id, count] : counts->by_token) {
    if (token_id == 0) {
      continue;
    }
    if (count > best_count ||
        (count == best_count && token_id < best)) {
      best = token_id;
      best_count = count;
    }
  }
  return best;
}

NGramModel train_ngram(const std::vector<Document>& corpus, std::size_t order,
                       double alpha) {
  if (corpus.empty()) {
    throw ConfigError("training corpus is empty");
  }
  if (order < 1 || order > 5) {
    throw ConfigError("n-gram order must lie in [1,5]");
  }
  if (!(alpha > 0.0)) {
    throw ConfigError("smoothing alpha must be positive");
  }

  NGramModel model;
  model.order_ = order;
  model.alpha_ = alpha;
  model.levels_.resize(order);

  for (const Document& doc : corpus) {
    auto tokens = token_strings(doc.text);
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
      ids.push_back(model.vocab_.add(t));
    }
    for (std::size_t t = 0; t < ids.size(); ++t) {
      std::size_t max_len = std::min(order - 1, t);
      for (std::size_t len = 0; len <= max_len; ++len) {
        auto& counts =
            model.levels_[len][pack_ids(ids.data() + t - len, len)];
        ++counts.by_token[ids[t]];
        ++counts.total;
      }
    }
  }
  if (model.vocab_.size() < 2) {
    throw ConfigError("training corpus produced no tokens");
  }
  return model;
}

}  // namespace memprobe
