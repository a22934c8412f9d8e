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

#include "memprobe/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <zlib.h>

#include "memprobe/error.hpp"
#include "memprobe/probe.hpp"
#include "memprobe/scoring.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

namespace {

std::vector<std::string> normalized_words(std::span<const std::string> words) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const std::string& w : words) {
    std::string n = normalize_token(w);
    if (!n.empty()) {
      out.push_back(std::move(n));
    }
  }
  return out;
}

std::vector<std::string> raw_words(std::string_view text) {
  std::vector<std::string> out;
  for (const Token& t : whitespace_words(text)) {
    out.push_back(t.text);
  }
  return out;
}

}  // namespace

std::size_t lcs_ids(std::span<const std::uint32_t> a,
                    std::span<const std::uint32_t> b) {
  if (a.empty() || b.empty()) {
    return 0;
  }
  // Classic O(n*m) DP with two rolling rows.
  std::vector<std::uint32_t> prev(b.size() + 1, 0);
  std::vector<std::uint32_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

std::size_t lcs_words(std::span<const std::string> a,
                      std::span<const std::string> b) {
  std::vector<std::string> na = normalized_words(a);
  std::vector<std::string> nb = normalized_words(b);
  // Intern normalized words so the DP compares integers, not strings.
  std::unordered_map<std::string, std::uint32_t> ids;
  auto intern = [&ids](const std::vector<std::string>& words) {
    std::vector<std::uint32_t> out;
    out.reserve(words.size());
    for (const auto& w : words) {
      out.push_back(
          ids.emplace(w, static_cast<std::uint32_t>(ids.size())).first->second);
    }
    return out;
  };
  std::vector<std::uint32_t> ia = intern(na);
  std::vector<std::uint32_t> ib = intern(nb);
  return lcs_ids(ia, ib);
}

PrefixProbeResult prefix_probe(const Document& doc, CompletionBackend& target,
                               const PromptTemplate& tpl,
                               std::size_t n_words) {
  PrefixProbeResult result;
  result.doc_id = doc.id;

  auto words = whitespace_words(doc.text);
  if (words.size() <= n_words) {
    result.skipped = true;
    result.skip_reason = "document has " + std::to_string(words.size()) +
                         " words, need more than " + std::to_string(n_words);
    return result;
  }
  const Token& last = words[n_words - 1];
  std::size_t prefix_end = last.offset + last.text.size();
  result.prefix = doc.text.substr(0, prefix_end);
  result.reference_suffix = doc.text.substr(prefix_end);

  try {
    result.generation = target.complete(tpl.render(result.prefix));
  } catch (const AuthError&) {
    throw;
  } catch (const EndpointError& err) {
    result.errored = true;
    result.error = err.what();
    return result;
  }

  result.lcs_words = lcs_words(raw_words(result.generation),
                               raw_words(result.reference_suffix));
  return result;
}

std::string_view mia_method_name(MiaMethod m) {
  switch (m) {
    case MiaMethod::kPpl:
      return "PPL";
    case MiaMethod::kPplCompression:
      return "PPL_Compression";
    case MiaMethod::kMinK:
      return "MinK";
  }
  return "PPL";
}

double min_k_score(std::span<const double> logprobs, double k_percent) {
  if (logprobs.empty()) {
    throw SchemaError("min_k_score over an empty logprob list");
  }
  if (k_percent <= 0.0 || k_percent > 100.0) {
    throw ConfigError("k_percent must lie in (0,100]");
  }
  auto n = logprobs.size();
  auto take = static_cast<std::size_t>(
      std::ceil(k_percent / 100.0 * static_cast<double>(n)));
  take = std::clamp<std::size_t>(take, 1, n);
  std::vector<double> sorted(logprobs.begin(), logprobs.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    sum += sorted[i];
  }
  return sum / static_cast<double>(take);
}

std::size_t deflate_bytes(std::string_view text) {
  z_stream stream{};
  // Raw DEFLATE (RFC 1951): negative window bits drop the zlib wrapper.
  if (deflateInit2(&stream, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error("deflateInit2 failed");
  }
  stream.next_in =
      reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
  stream.avail_in = static_cast<uInt>(text.size());

  std::size_t total = 0;
  unsigned char buffer[16384];
  int rc = Z_OK;
  do {
    stream.next_out = buffer;
    stream.avail_out = sizeof(buffer);
    rc = deflate(&stream, Z_FINISH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      deflateEnd(&stream);
      throw Error("deflate failed with code " + std::to_string(rc));
    }
    total += sizeof(buffer) - stream.avail_out;
  } while (rc != Z_STREAM_END);
  deflateEnd(&stream);
  return total;
}

std::vector<MIAScore> mia_scores(const Document& doc,
                                 const TokenScorer& scorer) {
  auto scores = score_document(scorer, doc);
  std::vector<double> logprobs;
  logprobs.reserve(scores.size());
  for (const TokenScore& s : scores) {
    if (s.logprob_estimated) {
      throw EndpointError(
          "scorer returned estimated logprobs (truncated distribution); "
          "membership-inference scores need exact token probabilities",
          /*transient=*/false);
    }
    logprobs.push_back(s.logprob);
  }
  double mean = 0.0;
  for (double lp : logprobs) {
    mean += lp;
  }
  mean /= static_cast<double>(logprobs.size());

  std::vector<MIAScore> out;
  out.push_back({doc.id, MiaMethod::kPpl, std::nullopt, std::exp(-mean)});
  out.push_back({doc.id, MiaMethod::kPplCompression, std::nullopt,
                 -mean / static_cast<double>(deflate_bytes(doc.text))});
  for (int k : {5, 10, 20, 30, 40}) {
    out.push_back({doc.id, MiaMethod::kMinK, k,
                   min_k_score(logprobs, static_cast<double>(k))});
  }
  return out;
}

bool ThresholdClassifier::predict(double score) const {
  return direction == Direction::kGe ? score >= threshold
                                     : score <= threshold;
}

nlohmann::json ThresholdClassifier::to_json() const {
  nlohmann::json j;
  j["threshold"] = threshold;
  j["direction"] = direction == Direction::kGe ? "ge" : "le";
  j["beta"] = beta;
  j["validation_f_beta"] = validation_f_beta;
  return j;
}

ThresholdClassifier ThresholdClassifier::from_json(const nlohmann::json& j) {
  ThresholdClassifier c;
  c.threshold = j.at("threshold").get<double>();
  std::string dir = j.at("direction").get<std::string>();
  if (dir != "ge" && dir != "le") {
    throw SchemaError("classifier direction must be \"ge\" or \"le\"");
  }
  c.direction = dir == "ge" ? Direction::kGe : Direction::kLe;
  c.beta = j.value("beta", 0.1);
  c.validation_f_beta = j.value("validation_f_beta", 0.0);
  return c;
}

ThresholdClassifier fit_threshold(
    std::span<const std::pair<double, int>> scored, double beta) {
  std::size_t positives = 0;
  for (const auto& [score, label] : scored) {
    if (label != 0 && label != 1) {
      throw SchemaError("labels must be 0 or 1");
    }
    positives += static_cast<std::size_t>(label);
  }
  if (positives == 0 || positives == scored.size()) {
    throw ConfigError("fit_threshold needs both classes present");
  }

  std::set<double> distinct;
  for (const auto& [score, label] : scored) {
    distinct.insert(score);
  }
  std::vector<double> grid;
  grid.reserve(distinct.size() + 1);
  std::vector<double> sorted(distinct.begin(), distinct.end());
  // All-positive / all-negative sentinels plus every midpoint between
  // neighbouring distinct scores.
  grid.push_back(sorted.front() - 1.0);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    grid.push_back((sorted[i] + sorted[i + 1]) / 2.0);
  }
  grid.push_back(sorted.back() + 1.0);

  auto f_of = [&](const ThresholdClassifier& c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [score, label] : scored) {
      bool predicted = c.predict(score);
      if (predicted && label == 1) {
        ++tp;
      } else if (predicted && label == 0) {
        ++fp;
      } else if (!predicted && label == 1) {
        ++fn;
      }
    }
    double precision =
        tp + fp > 0 ? 100.0 * static_cast<double>(tp) /
                          static_cast<double>(tp + fp)
                    : 0.0;
    double recall = tp + fn > 0 ? 100.0 * static_cast<double>(tp) /
                                      static_cast<double>(tp + fn)
                                : 0.0;
    return f_beta(precision, recall, beta);
  };

  ThresholdClassifier best;
  best.beta = beta;
  double best_f = -1.0;
  // >= orientation first, thresholds ascending; strictly-better wins, so
  // ties keep the lowest threshold.
  for (auto direction : {ThresholdClassifier::Direction::kGe,
                         ThresholdClassifier::Direction::kLe}) {
    for (double t : grid) {
      ThresholdClassifier candidate;
      candidate.threshold = t;
      candidate.direction = direction;
      candidate.beta = beta;
      double f = f_of(candidate);
      if (f > best_f + 1e-12) {
        best = candidate;
        best_f = f;
      }
    }
  }
  best.validation_f_beta = best_f;
  return best;
}

}  // namespace memprobe
