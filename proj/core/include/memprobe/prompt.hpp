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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace memprobe {

/// Placeholder each template file must contain exactly once.
inline constexpr std::string_view kInputPlaceholder = "{input}";

enum class TemplateId {
  kFictionCloze,
  kContaminationSlot,
  kFilterGuess,
  kFilterGuess100,
  kPrefixFiction,
  kPrefixNews,
  kInformativeWords,
};

std::string_view template_name(TemplateId id);
std::string_view template_filename(TemplateId id);
TemplateId template_id_from_name(std::string_view name);

/// A prompt template loaded verbatim from its fixture file. Rendering
/// replaces the single {input} placeholder with the given text and changes
/// no other byte.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  /// Validates that `text` contains the placeholder exactly once.
  PromptTemplate(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  /// Bytes before / after the placeholder.
  std::string_view prefix() const;
  std::string_view suffix() const;

  std::string render(std::string_view input) const;

  /// True when `prompt` equals prefix + something + suffix; on success the
  /// middle part is written to `input`.
  bool extract_input(std::string_view prompt, std::string* input) const;

 private:
  std::string id_;
  std::string text_;
  std::size_t placeholder_at_ = 0;
};

/// Loads and owns the template fixtures shipped under core/templates/.
class TemplateRegistry {
 public:
  /// Reads every known template file from `dir`. Missing or malformed
  /// fixtures raise IoError / SchemaError.
  static TemplateRegistry load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;
  const PromptTemplate& get(std::string_view name) const;

  /// Stable iteration order (declaration order of TemplateId).
  const std::vector<PromptTemplate>& all() const { return templates_; }

 private:
  std::vector<PromptTemplate> templates_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

}  // namespace memprobe
