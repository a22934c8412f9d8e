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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace memprobe {

/// One text sample under audit. `label` is the membership flag when known:
/// 1 = member (seen in training), 0 = non-member.
struct Document {
  std::string id;
  std::string text;
  std::optional<int> label;
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const Document& other) const;
};

struct ClassCounts {
  std::size_t members = 0;
  std::size_t non_members = 0;
  std::size_t unlabeled = 0;

  std::size_t labeled() const { return members + non_members; }
};

/// An ordered, immutable collection of documents with unique ids.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  /// Validates the documents: unique non-empty ids, non-empty text after
  /// whitespace trimming, labels in {0,1}. Throws SchemaError on violation.
  LabeledDataset(std::string name, std::vector<Document> documents);

  const std::string& name() const { return name_; }
  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  const Document* find(const std::string& id) const;
  ClassCounts class_counts() const;

  bool operator==(const LabeledDataset& other) const;

 private:
  std::string name_;
  std::vector<Document> documents_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads one JSON record per line: {"id", "text", "label"?, "meta"?}.
/// Malformed lines raise SchemaError naming the 1-based line number;
/// nothing is skipped silently. Input order is preserved.
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Writes the dataset back as JSONL. load(save(load(f))) == load(f).
void save_dataset(const LabeledDataset& dataset,
                  const std::filesystem::path& path);

/// Deterministic seeded split into (rest, holdout). The partition is exact
/// and stratified: per label class the holdout receives
/// round(holdout_fraction * class size) documents, so class balance is
/// preserved within one document per class. Original document order is kept
/// inside each half.
std::pair<LabeledDataset, LabeledDataset> split_holdout(
    const LabeledDataset& dataset, double holdout_fraction,
    std::uint64_t seed);

}  // namespace memprobe
