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

#include "memprobe/prompt.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "memprobe/error.hpp"

namespace memprobe {

namespace {

struct TemplateInfo {
  TemplateId id;
  std::string_view name;
  std::string_view filename;
};

constexpr std::array<TemplateInfo, 7> kTemplates = {{
    {TemplateId::kFictionCloze, "fiction_cloze", "fiction_cloze.txt"},
    {TemplateId::kContaminationSlot, "contamination_slot",
     "contamination_slot.txt"},
    {TemplateId::kFilterGuess, "filter_guess", "filter_guess.txt"},
    {TemplateId::kFilterGuess100, "filter_guess_100", "filter_guess_100.txt"},
    {TemplateId::kPrefixFiction, "prefix_fiction", "prefix_fiction.txt"},
    {TemplateId::kPrefixNews, "prefix_news", "prefix_news.txt"},
    {TemplateId::kInformativeWords, "informative_words",
     "informative_words.txt"},
}};

const TemplateInfo& info_for(TemplateId id) {
  for (const auto& info : kTemplates) {
    if (info.id == id) {
      return info;
    }
  }
  throw ConfigError("unknown template id");
}

}  // namespace

std::string_view template_name(TemplateId id) { return info_for(id).name; }

std::string_view template_filename(TemplateId id) {
  return info_for(id).filename;
}

TemplateId template_id_from_name(std::string_view name) {
  for (const auto& info : kTemplates) {
    if (info.name == name) {
      return info.id;
    }
  }
  throw ConfigError("unknown template name: " + std::string(name));
}

PromptTemplate::PromptTemplate(std::string id, std::string text)
    : id_(std::move(id)), text_(std::move(text)) {
  auto first = text_.find(kInputPlaceholder);
  if (first == std::string::npos) {
    throw SchemaError("template \"" + id_ + "\" has no " +
                      std::string(kInputPlaceholder) + " placeholder");
  }
  if (text_.find(kInputPlaceholder, first + 1) != std::string::npos) {
    throw SchemaError("template \"" + id_ +
                      "\" has more than one input placeholder");
  }
  placeholder_at_ = first;
}

std::string_view PromptTemplate::prefix() const {
  return std::string_view(text_).substr(0, placeholder_at_);
}

std::string_view PromptTemplate::suffix() const {
  return std::string_view(text_).substr(placeholder_at_ +
                                        kInputPlaceholder.size());
}

std::string PromptTemplate::render(std::string_view input) const {
  std::string out;
  out.reserve(text_.size() - kInputPlaceholder.size() + input.size());
  out.append(prefix());
  out.append(input);
  out.append(suffix());
  return out;
}

bool PromptTemplate::extract_input(std::string_view prompt,
                                   std::string* input) const {
  auto pre = prefix();
  auto suf = suffix();
  if (prompt.size() < pre.size() + suf.size()) {
    return false;
  }
  if (!prompt.starts_with(pre) || !prompt.ends_with(suf)) {
    return false;
  }
  if (input) {
    *input = std::string(
        prompt.substr(pre.size(), prompt.size() - pre.size() - suf.size()));
  }
  return true;
}

TemplateRegistry TemplateRegistry::load_dir(
    const std::filesystem::path& dir) {
  TemplateRegistry registry;
  for (const auto& info : kTemplates) {
    auto path = dir / info.filename;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw IoError("cannot open template fixture: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    registry.by_name_.emplace(std::string(info.name),
                              registry.templates_.size());
    registry.templates_.emplace_back(std::string(info.name), buf.str());
  }
  return registry;
}

const PromptTemplate& TemplateRegistry::get(TemplateId id) const {
  return get(template_name(id));
}

const PromptTemplate& TemplateRegistry::get(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw ConfigError("template not loaded: " + std::string(name));
  }
  return templates_[it->second];
}

}  // namespace memprobe
