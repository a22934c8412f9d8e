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

#include "memprobe/target.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "memprobe/error.hpp"

namespace memprobe {

void EndpointConfig::validate() const {
  if (base_url.empty()) {
    throw ConfigError("endpoint base_url is empty");
  }
  if (temperature < 0.0) {
    throw ConfigError("temperature must be >= 0");
  }
  if (max_in_flight < 1) {
    throw ConfigError("max_in_flight must be >= 1");
  }
  if (retry.max_attempts < 1) {
    throw ConfigError("retry.max_attempts must be >= 1");
  }
}

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:8080"
  std::string path;              // e.g. "/v1/chat/completions"
};

ParsedUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("URL missing scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    ParsedUrl url = split_url(request.url);
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(request.timeout_sec, 0);
    client.set_read_timeout(request.timeout_sec, 0);
    client.set_write_timeout(request.timeout_sec, 0);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) {
      headers.emplace(k, v);
    }
    auto result =
        client.Post(url.path, headers, request.body, "application/json");
    HttpResponse response;
    if (!result) {
      response.network_error = true;
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
  }
};

const nlohmann::json* walk_path(const nlohmann::json& root,
                                const std::string& dot_path) {
  const nlohmann::json* node = &root;
  std::istringstream parts(dot_path);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        index = std::stoul(part);
      } catch (...) {
        return nullptr;
      }
      if (index >= node->size()) {
        return nullptr;
      }
      node = &(*node)[index];
    } else if (node->is_object()) {
      auto it = node->find(part);
      if (it == node->end()) {
        return nullptr;
      }
      node = &*it;
    } else {
      return nullptr;
    }
  }
  return node;
}

bool retryable_status(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

}  // namespace

std::unique_ptr<HttpTransport> make_default_transport() {
  return std::make_unique<HttplibTransport>();
}

ResponseCache::ResponseCache(std::filesystem::path path)
    : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  std::ifstream in(path_, std::ios::binary);
  if (in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("key") || !j.contains("response")) {
        // A torn final line from an interrupted append is not fatal.
        continue;
      }
      entries_[j["key"].get<std::string>()] =
          j["response"].get<std::string>();
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) {
    throw IoError("cannot open cache file for append: " + path_.string());
  }
}

std::string ResponseCache::digest(const std::string& model_name,
                                  const std::string& prompt,
                                  double temperature,
                                  std::size_t max_output_tokens) {
  char params[64];
  std::snprintf(params, sizeof(params), "%.17g|%zu", temperature,
                max_output_tokens);
  std::string material;
  material.reserve(model_name.size() + prompt.size() + 72);
  material.append(model_name);
  material.push_back('\x1e');
  material.append(prompt);
  material.push_back('\x1e');
  material.append(params);
  return sha256_hex(material);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, response);
  if (!inserted) {
    if (it->second == response) {
      return;  // identical content; appending would only grow the file
    }
    // Changed content must also reach the file: on reload, later lines win.
    it->second = response;
  }
  nlohmann::json j;
  j["key"] = key;
  j["response"] = response;
  j["ts"] = static_cast<std::int64_t>(std::time(nullptr));
  out_ << j.dump() << '\n';
  out_.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

ChatClient::ChatClient(EndpointConfig config, ResponseCache* cache,
                       std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      cache_(cache),
      transport_(transport ? std::move(transport) : make_default_transport()) {
  config_.validate();
}

std::string ChatClient::send_once(const std::string& prompt) {
  nlohmann::json body;
  body["model"] = config_.model_name;
  body["messages"] =
      nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_output_tokens;

  HttpRequest request;
  request.url = config_.base_url;
  request.body = body.dump();
  if (!config_.auth_env_var.empty()) {
    const char* token = std::getenv(config_.auth_env_var.c_str());
    if (token != nullptr && *token != '\0') {
      request.headers.emplace_back("Authorization",
                                   std::string("Bearer ") + token);
    }
  }

  requests_sent_.fetch_add(1);
  HttpResponse response = transport_->post(request);
  if (response.network_error) {
    throw EndpointError("network error: " + response.error,
                        /*transient=*/true);
  }
  if (response.status == 401 || response.status == 403) {
    throw AuthError("authentication rejected (HTTP " +
                    std::to_string(response.status) + ") by " +
                    config_.base_url);
  }
  if (response.status != 200) {
    throw EndpointError(
        "HTTP " + std::to_string(response.status) + " from " +
            config_.base_url,
        /*transient=*/retryable_status(response.status));
  }

  nlohmann::json payload = nlohmann::json::parse(response.body, nullptr, false);
  if (payload.is_discarded()) {
    throw EndpointError("response is not valid JSON", /*transient=*/false);
  }
  const nlohmann::json* content = walk_path(payload, config_.response_path);
  if (content == nullptr || !content->is_string()) {
    throw EndpointError(
        "response has no string at path \"" + config_.response_path + "\"",
        /*transient=*/false);
  }
  return content->get<std::string>();
}

std::string ChatClient::complete(const std::string& prompt) {
  std::string key;
  if (cache_ != nullptr) {
    key = ResponseCache::digest(config_.model_name, prompt,
                                config_.temperature,
                                config_.max_output_tokens);
    if (auto hit = cache_->get(key)) {
      return *hit;
    }
  }

  std::string last_error;
  for (std::size_t attempt = 1; attempt <= config_.retry.max_attempts;
       ++attempt) {
    try {
      std::string response = send_once(prompt);
      if (cache_ != nullptr) {
        cache_->put(key, response);
      }
      return response;
    } catch (const AuthError&) {
      throw;
    } catch (const EndpointError& err) {
      if (!err.transient()) {
        throw;
      }
      last_error = err.what();
      if (attempt < config_.retry.max_attempts) {
        const auto& schedule = config_.retry.backoff;
        auto delay = schedule.empty()
                         ? std::chrono::milliseconds(0)
                         : schedule[std::min(attempt - 1,
                                             schedule.size() - 1)];
        std::this_thread::sleep_for(delay);
      }
    }
  }
  throw EndpointError("retries exhausted after " +
                          std::to_string(config_.retry.max_attempts) +
                          " attempts: " + last_error,
                      /*transient=*/true);
}

std::vector<BatchResult> run_batch(CompletionBackend& backend,
                                   const std::vector<std::string>& prompts) {
  std::vector<BatchResult> results(prompts.size());
  std::size_t workers = std::min(backend.max_in_flight(), prompts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      try {
        results[i].response = backend.complete(prompts[i]);
      } catch (const AuthError&) {
        throw;
      } catch (const EndpointError& err) {
        results[i].errored = true;
        results[i].error = err.what();
      }
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&]() {
    while (!abort.load()) {
      std::size_t i = next.fetch_add(1);
      if (i >= prompts.size()) {
        return;
      }
      try {
        results[i].response = backend.complete(prompts[i]);
      } catch (const AuthError&) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) {
          fatal = std::current_exception();
        }
        abort.store(true);
        return;
      } catch (const EndpointError& err) {
        results[i].errored = true;
        results[i].error = err.what();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) {
    t.join();
  }
  if (fatal) {
    std::rethrow_exception(fatal);
  }
  return results;
}

}  // namespace memprobe
