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

#include "memprobe/external_scorer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "memprobe/error.hpp"

namespace memprobe {

ExternalScorer::ExternalScorer(Config config,
                               std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_default_transport()) {
  if (config_.url.empty()) {
    throw ConfigError("external scorer URL is empty");
  }
}

PositionDistribution ExternalScorer::position_distribution(
    const std::vector<std::string>& tokens, std::size_t position) const {
  if (position >= tokens.size()) {
    throw SchemaError("position out of range for distribution");
  }
  nlohmann::json body;
  body["tokens"] = tokens;
  body["position"] = position;

  HttpRequest request;
  request.url = config_.url;
  request.body = body.dump();
  request.timeout_sec = config_.timeout_sec;
  HttpResponse response = transport_->post(request);
  if (response.network_error) {
    throw EndpointError("scorer network error: " + response.error,
                        /*transient=*/true);
  }
  if (response.status != 200) {
    throw EndpointError(
        "scorer returned HTTP " + std::to_string(response.status),
        /*transient=*/response.status == 429 || response.status >= 500);
  }
  nlohmann::json payload = nlohmann::json::parse(response.body, nullptr, false);
  if (payload.is_discarded() || !payload.contains("logprobs") ||
      !payload["logprobs"].is_object()) {
    throw EndpointError("scorer response missing \"logprobs\" object",
                        /*transient=*/false);
  }

  std::vector<std::pair<std::string, double>> entries;
  entries.reserve(payload["logprobs"].size());
  for (const auto& [token, lp] : payload["logprobs"].items()) {
    if (!lp.is_number()) {
      throw EndpointError("non-numeric logprob for token \"" + token + "\"",
                          /*transient=*/false);
    }
    entries.emplace_back(token, std::exp(lp.get<double>()));
  }
  if (entries.empty()) {
    throw EndpointError("scorer returned an empty distribution",
                        /*transient=*/false);
  }
  // Deterministic order regardless of server-side map ordering.
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) {
      return a.second > b.second;
    }
    return a.first < b.first;
  });

  double sum = 0.0;
  std::vector<std::string> names;
  std::vector<double> probs;
  names.reserve(entries.size());
  probs.reserve(entries.size());
  for (auto& [token, p] : entries) {
    sum += p;
    names.push_back(std::move(token));
    probs.push_back(p);
  }
  bool declared_truncation =
      config_.top_n > 0 && entries.size() >= config_.top_n;
  bool truncated = declared_truncation || sum < 1.0 - 1e-6;
  double residual = std::max(0.0, 1.0 - sum);
  return PositionDistribution::from_entries(std::move(names), std::move(probs),
                                            truncated, residual);
}

}  // namespace memprobe
