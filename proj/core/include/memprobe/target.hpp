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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace memprobe {

/// Anything that can answer a prompt with text: an HTTP chat endpoint, the
/// local stub model, or a test double.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string name() const = 0;
  /// Returns the model's raw response. Throws EndpointError on failure and
  /// AuthError when credentials are rejected.
  virtual std::string complete(const std::string& prompt) = 0;
  /// How many requests may be issued concurrently against this backend.
  virtual std::size_t max_in_flight() const { return 1; }
};

struct RetryPolicy {
  std::size_t max_attempts = 3;
  // Delay before attempt k+1; the last entry repeats when attempts exceed
  // the schedule length.
  std::vector<std::chrono::milliseconds> backoff = {
      std::chrono::milliseconds(250), std::chrono::milliseconds(1000),
      std::chrono::milliseconds(4000)};
};

struct EndpointConfig {
  std::string base_url;  // full chat-completion URL
  std::string model_name;
  double temperature = 0.0;
  std::size_t max_output_tokens = 16;  // 256 for prefix probing
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  // Name of the environment variable holding the bearer token. The value is
  // read per request and never stored or serialized.
  std::string auth_env_var;
  // Dot-path into the response JSON for the assistant text.
  std::string response_path = "choices.0.message.content";

  void validate() const;  // throws ConfigError
};

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  int timeout_sec = 120;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  bool network_error = false;
  std::string error;
};

/// Transport seam for the HTTP client; tests inject fakes here.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib based transport (https when built with TLS support).
std::unique_ptr<HttpTransport> make_default_transport();

/// Append-only JSONL response cache keyed by a SHA-256 digest of
/// (model, prompt, temperature, max_output_tokens). Safe for concurrent
/// readers and writers; duplicate puts of identical content are no-ops.
class ResponseCache {
 public:
  /// Opens (and creates if needed) the cache file, loading existing entries.
  explicit ResponseCache(std::filesystem::path path);

  static std::string digest(const std::string& model_name,
                            const std::string& prompt, double temperature,
                            std::size_t max_output_tokens);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& response);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::ofstream out_;
};

/// Retrying, caching chat-completion client. Cache hits bypass the network
/// entirely; transient failures (connect errors, 408/409/429/5xx) are
/// retried per the backoff schedule; 401/403 raise AuthError.
class ChatClient final : public CompletionBackend {
 public:
  ChatClient(EndpointConfig config, ResponseCache* cache = nullptr,
             std::unique_ptr<HttpTransport> transport = nullptr);

  std::string name() const override { return config_.model_name; }
  std::string complete(const std::string& prompt) override;
  std::size_t max_in_flight() const override { return config_.max_in_flight; }

  const EndpointConfig& config() const { return config_; }
  /// Number of requests actually sent over the transport (cache misses).
  std::size_t requests_sent() const { return requests_sent_.load(); }

 private:
  std::string send_once(const std::string& prompt);

  EndpointConfig config_;
  ResponseCache* cache_;
  std::unique_ptr<HttpTransport> transport_;
  std::atomic<std::size_t> requests_sent_{0};
};

struct BatchResult {
  std::string response;
  bool errored = false;
  std::string error;
};

/// Completes every prompt, bounded by the backend's max_in_flight. Endpoint
/// errors are captured per prompt; AuthError aborts the batch and
/// propagates. Results are returned in input order.
std::vector<BatchResult> run_batch(CompletionBackend& backend,
                                   const std::vector<std::string>& prompts);

/// Hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view data);

}  // namespace memprobe
