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

#include "memprobe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "memprobe/error.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return is_ascii_space(c); });
}

[[noreturn]] void schema_fail(const std::filesystem::path& path,
                              std::size_t line_no, const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line_no << ": " << what;
  throw SchemaError(msg.str());
}

Document parse_record(const nlohmann::json& j,
                      const std::filesystem::path& path,
                      std::size_t line_no) {
  if (!j.is_object()) {
    schema_fail(path, line_no, "record is not a JSON object");
  }
  Document doc;
  if (!j.contains("id") || !j.at("id").is_string()) {
    schema_fail(path, line_no, "missing string field \"id\"");
  }
  doc.id = j.at("id").get<std::string>();
  if (!j.contains("text") || !j.at("text").is_string()) {
    schema_fail(path, line_no, "missing string field \"text\"");
  }
  doc.text = j.at("text").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null()) {
    const auto& label = j.at("label");
    if (label.is_boolean()) {
      doc.label = label.get<bool>() ? 1 : 0;
    } else if (label.is_number_integer()) {
      int v = label.get<int>();
      if (v != 0 && v != 1) {
        schema_fail(path, line_no, "label must be 0 or 1");
      }
      doc.label = v;
    } else {
      schema_fail(path, line_no, "label must be 0 or 1");
    }
  }
  if (j.contains("meta")) {
    if (!j.at("meta").is_object()) {
      schema_fail(path, line_no, "meta must be an object");
    }
    doc.meta = j.at("meta");
  }
  return doc;
}

}  // namespace

bool Document::operator==(const Document& other) const {
  return id == other.id && text == other.text && label == other.label &&
         meta == other.meta;
}

LabeledDataset::LabeledDataset(std::string name,
                               std::vector<Document> documents)
    : name_(std::move(name)), documents_(std::move(documents)) {
  by_id_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& d = documents_[i];
    if (d.id.empty()) {
      throw SchemaError("dataset \"" + name_ + "\": document with empty id");
    }
    if (is_blank(d.text)) {
      throw SchemaError("dataset \"" + name_ + "\": document \"" + d.id +
                        "\" has empty text");
    }
    if (d.label && *d.label != 0 && *d.label != 1) {
      throw SchemaError("dataset \"" + name_ + "\": document \"" + d.id +
                        "\" has label outside {0,1}");
    }
    if (!by_id_.emplace(d.id, i).second) {
      throw SchemaError("dataset \"" + name_ + "\": duplicate id \"" + d.id +
                        "\"");
    }
  }
}

const Document* LabeledDataset::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &documents_[it->second];
}

ClassCounts LabeledDataset::class_counts() const {
  ClassCounts counts;
  for (const Document& d : documents_) {
    if (!d.label) {
      ++counts.unlabeled;
    } else if (*d.label == 1) {
      ++counts.members;
    } else {
      ++counts.non_members;
    }
  }
  return counts;
}

bool LabeledDataset::operator==(const LabeledDataset& other) const {
  return documents_ == other.documents_;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset file: " + path.string());
  }
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      schema_fail(path, line_no, "empty line");
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      schema_fail(path, line_no, std::string("invalid JSON: ") + ex.what());
    }
    docs.push_back(parse_record(j, path, line_no));
  }
  if (in.bad()) {
    throw IoError("read failure on " + path.string());
  }
  return LabeledDataset(path.stem().string(), std::move(docs));
}

void save_dataset(const LabeledDataset& dataset,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  for (const Document& d : dataset.documents()) {
    nlohmann::json j;
    j["id"] = d.id;
    j["text"] = d.text;
    if (d.label) {
      j["label"] = *d.label;
    }
    if (!d.meta.empty()) {
      j["meta"] = d.meta;
    }
    out << j.dump() << '\n';
  }
  if (!out) {
    throw IoError("write failure on " + path.string());
  }
}

std::pair<LabeledDataset, LabeledDataset> split_holdout(
    const LabeledDataset& dataset, double holdout_fraction,
    std::uint64_t seed) {
  if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0,1)");
  }
  if (dataset.size() < 2) {
    throw ConfigError("dataset too small to split (need >= 2 documents)");
  }

  // Stratify by label so class balance carries into both halves. Group keys
  // iterate in a fixed order (-1 unlabeled, then 0, then 1).
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& label = dataset.documents()[i].label;
    groups[label ? *label : -1].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> in_holdout(dataset.size(), false);
  for (auto& [label, indices] : groups) {
    // Fisher-Yates with an explicit draw so the split is reproducible
    // across standard library implementations.
    for (std::size_t i = indices.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(indices[i - 1], indices[j]);
    }
    auto k = static_cast<std::size_t>(
        std::llround(holdout_fraction * static_cast<double>(indices.size())));
    k = std::min(k, indices.size());
    for (std::size_t i = 0; i < k; ++i) {
      in_holdout[indices[i]] = true;
    }
  }

  std::vector<Document> rest, holdout;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_holdout[i] ? holdout : rest).push_back(dataset.documents()[i]);
  }
  return {LabeledDataset(dataset.name() + ":rest", std::move(rest)),
          LabeledDataset(dataset.name() + ":holdout", std::move(holdout))};
}

}  // namespace memprobe
