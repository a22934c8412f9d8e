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

#include <stdexcept>
#include <string>

namespace memprobe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or stream level failure (missing file, unreadable path, ...).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented schema (bad JSONL record, duplicate id,
/// stale candidate, ...). Messages carry the offending location.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or out-of-range parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A remote model endpoint failed. `transient()` distinguishes retryable
/// conditions (timeouts, 429, 5xx) from permanent ones (4xx schema errors).
class EndpointError : public Error {
 public:
  EndpointError(const std::string& what, bool transient)
      : Error(what), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

/// Authentication was rejected. Always fatal: retrying cannot help and the
/// pipeline must stop rather than burn requests.
class AuthError : public Error {
 public:
  using Error::Error;
};

}  // namespace memprobe
