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

#include <fstream>
#include <set>

#include <doctest.h>

#include "memprobe/error.hpp"
#include "support/test_helpers.hpp"

using namespace memprobe;

namespace {

std::filesystem::path write_lines(const std::filesystem::path& dir,
                                  const std::string& name,
                                  const std::vector<std::string>& lines) {
  auto path = dir / name;
  std::ofstream out(path, std::ios::binary);
  for (const auto& line : lines) {
    out << line << '\n';
  }
  return path;
}

}  // namespace

TEST_CASE("load_dataset ingests valid JSONL in order") {
  testing::TempDir tmp;
  auto path = write_lines(tmp.path(), "ds.jsonl",
                          {R"({"id":"a","text":"one two"})",
                           R"({"id":"b","text":"three","label":1})",
                           R"({"id":"c","text":"four","meta":{"title":"T"}})"});
  LabeledDataset ds = load_dataset(path);
  REQUIRE(ds.size() == 3);
  CHECK(ds.documents()[0].id == "a");
  CHECK(ds.documents()[1].label == 1);
  CHECK(ds.documents()[2].meta.at("title") == "T");
  CHECK(ds.find("b") != nullptr);
  CHECK(ds.find("zz") == nullptr);
}

TEST_CASE("load_dataset rejects a line missing text, naming the line") {
  testing::TempDir tmp;
  auto path = write_lines(tmp.path(), "bad.jsonl",
                          {R"({"id":"a","text":"fine"})", R"({"id":"b"})"});
  CHECK_THROWS_WITH_AS(load_dataset(path),
                       doctest::Contains(":2:"), SchemaError);
}

TEST_CASE("load_dataset rejects malformed JSON and blank lines") {
  testing::TempDir tmp;
  auto bad = write_lines(tmp.path(), "bad.jsonl", {"{not json"});
  CHECK_THROWS_AS(load_dataset(bad), SchemaError);
  auto blank = write_lines(tmp.path(), "blank.jsonl",
                           {R"({"id":"a","text":"x"})", ""});
  CHECK_THROWS_AS(load_dataset(blank), SchemaError);
}

TEST_CASE("load_dataset rejects duplicate ids") {
  testing::TempDir tmp;
  auto path = write_lines(tmp.path(), "dup.jsonl",
                          {R"({"id":"a","text":"x"})",
                           R"({"id":"a","text":"y"})"});
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("duplicate id"),
                       SchemaError);
}

TEST_CASE("load_dataset rejects labels outside {0,1} and empty text") {
  testing::TempDir tmp;
  auto bad_label = write_lines(tmp.path(), "l.jsonl",
                               {R"({"id":"a","text":"x","label":2})"});
  CHECK_THROWS_AS(load_dataset(bad_label), SchemaError);
  auto empty_text =
      write_lines(tmp.path(), "t.jsonl", {R"({"id":"a","text":"  "})"});
  CHECK_THROWS_AS(load_dataset(empty_text), SchemaError);
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/nowhere.jsonl"), IoError);
}

TEST_CASE("save and load round-trips the dataset") {
  testing::TempDir tmp;
  std::mt19937_64 rng(99);
  std::vector<Document> docs;
  for (int i = 0; i < 25; ++i) {
    Document d = testing::random_document(rng, "doc" + std::to_string(i));
    if (i % 3 != 0) {
      d.label = i % 2;
    }
    if (i % 4 == 0) {
      d.meta = {{"source", "gen"}, {"index", i}};
    }
    docs.push_back(std::move(d));
  }
  LabeledDataset ds("round", docs);
  auto path = tmp.path() / "round.jsonl";
  save_dataset(ds, path);
  LabeledDataset loaded = load_dataset(path);
  CHECK(loaded == ds);

  // Stability: another save/load cycle yields the identical dataset.
  auto path2 = tmp.path() / "round2.jsonl";
  save_dataset(loaded, path2);
  CHECK(load_dataset(path2) == loaded);
}

TEST_CASE("split_holdout partitions exactly and deterministically") {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back({"d" + std::to_string(i), "text " + std::to_string(i),
                    std::nullopt, nlohmann::json::object()});
  }
  LabeledDataset ds("ten", docs);
  auto [rest, holdout] = split_holdout(ds, 0.2, 7);
  CHECK(rest.size() == 8);
  CHECK(holdout.size() == 2);

  std::set<std::string> ids;
  for (const auto& d : rest.documents()) ids.insert(d.id);
  for (const auto& d : holdout.documents()) ids.insert(d.id);
  CHECK(ids.size() == 10);  // disjoint and nothing lost

  auto [rest2, holdout2] = split_holdout(ds, 0.2, 7);
  CHECK(rest2 == rest);
  CHECK(holdout2 == holdout);

  auto [rest3, holdout3] = split_holdout(ds, 0.2, 8);
  CHECK((rest3 == rest) == false);  // a different seed moves documents
}

TEST_CASE("split_holdout preserves class balance within one per class") {
  std::vector<Document> docs;
  for (int i = 0; i < 97; ++i) {
    docs.push_back({"m" + std::to_string(i), "member text", 1,
                    nlohmann::json::object()});
  }
  for (int i = 0; i < 83; ++i) {
    docs.push_back({"n" + std::to_string(i), "non-member text", 0,
                    nlohmann::json::object()});
  }
  LabeledDataset ds("labeled", docs);
  auto [rest, holdout] = split_holdout(ds, 0.25, 3);
  ClassCounts hc = holdout.class_counts();
  CHECK(std::abs(static_cast<double>(hc.members) - 0.25 * 97) <= 1.0);
  CHECK(std::abs(static_cast<double>(hc.non_members) - 0.25 * 83) <= 1.0);
  CHECK(rest.size() + holdout.size() == ds.size());
}

TEST_CASE("split_holdout mirrors a validation carve-out of 1870 from 9870") {
  std::vector<Document> docs;
  for (int i = 0; i < 9870; ++i) {
    docs.push_back({"d" + std::to_string(i), "sample", i % 2,
                    nlohmann::json::object()});
  }
  LabeledDataset ds("bookmia-scale", docs);
  double fraction = 1870.0 / 9870.0;
  auto [rest, holdout] = split_holdout(ds, fraction, 11);
  CHECK(holdout.size() == 1870);
  CHECK(rest.size() == 8000);
}

TEST_CASE("split_holdout rejects bad fractions and tiny datasets") {
  std::vector<Document> docs = {
      {"a", "x", std::nullopt, nlohmann::json::object()},
      {"b", "y", std::nullopt, nlohmann::json::object()}};
  LabeledDataset ds("two", docs);
  CHECK_THROWS_AS(split_holdout(ds, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_holdout(ds, 1.0, 1), ConfigError);
  LabeledDataset one("one", {docs[0]});
  CHECK_THROWS_AS(split_holdout(one, 0.5, 1), ConfigError);
}

TEST_CASE("class_counts tallies labels") {
  std::vector<Document> docs = {
      {"a", "x", 1, nlohmann::json::object()},
      {"b", "y", 0, nlohmann::json::object()},
      {"c", "z", std::nullopt, nlohmann::json::object()}};
  LabeledDataset ds("mixed", docs);
  ClassCounts counts = ds.class_counts();
  CHECK(counts.members == 1);
  CHECK(counts.non_members == 1);
  CHECK(counts.unlabeled == 1);
}
