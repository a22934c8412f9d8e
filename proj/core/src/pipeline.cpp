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

#include "memprobe/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_set>

#include "memprobe/error.hpp"
#include "memprobe/tokenizer.hpp"

namespace memprobe {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
  }
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& rows) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  for (const auto& row : rows) {
    out << row.dump() << '\n';
  }
  if (!out) {
    throw IoError("write failure on " + path.string());
  }
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path.string());
  }
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                        ": invalid JSON");
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << text;
}

EndpointConfig endpoint_from_json(const nlohmann::json& j) {
  EndpointConfig cfg;
  cfg.base_url = j.at("base_url").get<std::string>();
  cfg.model_name = j.value("model_name", std::string("default"));
  cfg.temperature = j.value("temperature", 0.0);
  cfg.max_output_tokens = j.value("max_output_tokens", std::size_t{16});
  cfg.max_in_flight = j.value("max_in_flight", std::size_t{4});
  cfg.auth_env_var = j.value("auth_env_var", std::string());
  cfg.response_path =
      j.value("response_path", std::string("choices.0.message.content"));
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    cfg.retry.max_attempts = r.value("max_attempts", std::size_t{3});
    if (r.contains("backoff_ms")) {
      cfg.retry.backoff.clear();
      for (const auto& ms : r.at("backoff_ms")) {
        cfg.retry.backoff.emplace_back(ms.get<std::int64_t>());
      }
    }
  }
  cfg.validate();
  return cfg;
}

std::string sanitize_for_filename(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      c = '_';
    }
  }
  return s;
}

double em_or_zero(const std::vector<bool>& outcomes) {
  return outcomes.empty() ? 0.0 : exact_match_rate(outcomes);
}

}  // namespace

std::filesystem::path PipelineConfig::candidates_path() const {
  return out_dir / "candidates.jsonl";
}
std::filesystem::path PipelineConfig::probes_path() const {
  return out_dir / "probes.jsonl";
}
std::filesystem::path PipelineConfig::outcomes_path() const {
  return out_dir / "outcomes.jsonl";
}
std::filesystem::path PipelineConfig::resolved_cache_path() const {
  return cache_path.empty() ? out_dir / "cache.jsonl" : cache_path;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  if (!j.contains("dataset")) {
    throw ConfigError("config is missing \"dataset\"");
  }
  cfg.dataset = j.at("dataset").get<std::string>();
  cfg.out_dir = j.value("out_dir", std::string("out"));
  cfg.cache_path = j.value("cache", std::string());
  cfg.templates_dir = j.value("templates_dir", std::string());
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.beta = j.value("beta", 0.1);
  cfg.probe_template = j.value("probe_template", std::string("fiction_cloze"));

  if (j.contains("scorer")) {
    const auto& s = j.at("scorer");
    std::string type = s.value("type", std::string("ngram"));
    if (type == "ngram") {
      cfg.scorer.type = ScorerSpec::Type::kNgram;
      cfg.scorer.order = s.value("order", std::size_t{3});
      cfg.scorer.alpha = s.value("alpha", 1e-4);
      cfg.scorer.train = s.value("train", std::string("self"));
    } else if (type == "http") {
      cfg.scorer.type = ScorerSpec::Type::kHttp;
      cfg.scorer.url = s.at("url").get<std::string>();
      cfg.scorer.top_n = s.value("top_n", std::size_t{0});
    } else {
      throw ConfigError("scorer.type must be \"ngram\" or \"http\"");
    }
  }

  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    cfg.selection.strategy =
        strategy_from_name(s.value("strategy", std::string("Prob")));
    cfg.selection.logprob_threshold = s.value("logprob_threshold", -12.0);
    cfg.selection.rank_threshold =
        s.value("rank_threshold", std::size_t{2000});
    cfg.selection.max_candidates =
        s.value("max_candidates", std::size_t{10});
    cfg.selection.min_matches_for_verdict =
        s.value("min_matches", std::size_t{2});
    cfg.selection.content_word_filter = s.value("content_word_filter", true);
    cfg.selection.validate();
  }

  if (j.contains("filter_models")) {
    for (const auto& f : j.at("filter_models")) {
      cfg.filter_models.push_back(endpoint_from_json(f));
    }
  }
  if (j.contains("informative_model")) {
    cfg.informative_model = endpoint_from_json(j.at("informative_model"));
  }

  if (j.contains("target")) {
    const auto& t = j.at("target");
    std::string type = t.value("type", std::string("stub"));
    if (type == "stub") {
      cfg.target.type = TargetSpec::Type::kStub;
      cfg.target.recall_probability = t.value("recall_probability", 1.0);
      cfg.target.contaminate_path = t.value("contaminate", std::string());
    } else if (type == "http") {
      cfg.target.type = TargetSpec::Type::kHttp;
      cfg.target.endpoint = endpoint_from_json(t.at("endpoint"));
    } else {
      throw ConfigError("target.type must be \"stub\" or \"http\"");
    }
  }

  if (j.contains("baseline")) {
    const auto& b = j.at("baseline");
    cfg.baseline.n_prefix_words =
        b.value("n_prefix_words", std::size_t{50});
    cfg.baseline.prefix_template =
        b.value("prefix_template", std::string("prefix_fiction"));
    cfg.baseline.holdout_fraction = b.value("holdout_fraction", 0.2);
    cfg.baseline.max_output_tokens =
        b.value("max_output_tokens", std::size_t{256});
  }

  if (j.contains("contaminate")) {
    const auto& c = j.at("contaminate");
    if (c.contains("strategies")) {
      cfg.contaminate.strategies.clear();
      for (const auto& s : c.at("strategies")) {
        cfg.contaminate.strategies.push_back(s.get<std::string>());
      }
    }
    cfg.contaminate.contaminate_fraction =
        c.value("contaminate_fraction", 0.5);
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config: " + path.string());
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("config is not valid JSON: " + path.string());
  }
  return config_from_json(j);
}

nlohmann::json candidate_to_json(const CandidateToken& c) {
  nlohmann::json j;
  j["doc_id"] = c.doc_id;
  j["position"] = c.position;
  j["surface"] = c.surface;
  j["logprob"] = c.logprob ? nlohmann::json(*c.logprob) : nlohmann::json();
  j["rank"] = c.rank ? nlohmann::json(*c.rank) : nlohmann::json();
  j["strategy"] = std::string(strategy_name(c.strategy));
  j["rank_lower_bound"] = c.rank_is_lower_bound;
  j["logprob_estimated"] = c.logprob_estimated;
  j["filtered_out"] = c.filtered_out;
  j["reason"] = c.filter_reason;
  j["filter_error"] = c.filter_error;
  return j;
}

CandidateToken candidate_from_json(const nlohmann::json& j) {
  CandidateToken c;
  c.doc_id = j.at("doc_id").get<std::string>();
  c.position = j.at("position").get<std::size_t>();
  c.surface = j.at("surface").get<std::string>();
  if (j.contains("logprob") && !j.at("logprob").is_null()) {
    c.logprob = j.at("logprob").get<double>();
  }
  if (j.contains("rank") && !j.at("rank").is_null()) {
    c.rank = j.at("rank").get<std::size_t>();
  }
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.rank_is_lower_bound = j.value("rank_lower_bound", false);
  c.logprob_estimated = j.value("logprob_estimated", false);
  c.filtered_out = j.value("filtered_out", false);
  c.filter_reason = j.value("reason", std::string());
  c.filter_error = j.value("filter_error", false);
  return c;
}

nlohmann::json outcome_to_json(const ProbeOutcome& o) {
  nlohmann::json j;
  j["doc_id"] = o.doc_id;
  j["position"] = o.position;
  j["strategy"] = o.strategy;
  j["template_id"] = o.template_id;
  j["gold"] = o.gold;
  j["raw_response"] = o.raw_response;
  j["guess"] = o.guess ? nlohmann::json(*o.guess) : nlohmann::json();
  j["parse_path"] = o.parse_path;
  j["matched"] = o.matched;
  j["errored"] = o.errored;
  j["error"] = o.error;
  return j;
}

ProbeOutcome outcome_from_json(const nlohmann::json& j) {
  ProbeOutcome o;
  o.doc_id = j.at("doc_id").get<std::string>();
  o.position = j.at("position").get<std::size_t>();
  o.strategy = j.value("strategy", std::string("Prob"));
  o.template_id = j.value("template_id", std::string());
  o.gold = j.at("gold").get<std::string>();
  o.raw_response = j.value("raw_response", std::string());
  if (j.contains("guess") && !j.at("guess").is_null()) {
    o.guess = j.at("guess").get<std::string>();
  }
  o.parse_path = j.value("parse_path", std::string("unparseable"));
  o.matched = j.value("matched", false);
  o.errored = j.value("errored", false);
  o.error = j.value("error", std::string());
  return o;
}

nlohmann::json probe_to_json(const Probe& p) {
  nlohmann::json j;
  j["doc_id"] = p.doc_id;
  j["position"] = p.candidate.position;
  j["gold"] = p.gold;
  j["masked_text"] = p.masked_text;
  j["prompt"] = p.prompt;
  j["template_id"] = p.template_id;
  return j;
}

std::vector<CandidateToken> load_candidates(
    const std::filesystem::path& path) {
  std::vector<CandidateToken> out;
  for (const auto& row : read_jsonl(path)) {
    out.push_back(candidate_from_json(row));
  }
  return out;
}

std::vector<ProbeOutcome> load_outcomes(const std::filesystem::path& path) {
  std::vector<ProbeOutcome> out;
  for (const auto& row : read_jsonl(path)) {
    out.push_back(outcome_from_json(row));
  }
  return out;
}

PipelineRuntime build_runtime(
    const PipelineConfig& config,
    std::unique_ptr<HttpTransport> (*transport_factory)()) {
  PipelineRuntime rt;
  rt.dataset = load_dataset(config.dataset);
  if (rt.dataset.empty()) {
    throw ConfigError("dataset is empty: " + config.dataset.string());
  }

  std::filesystem::path templates_dir = config.templates_dir;
  if (templates_dir.empty()) {
    if (const char* env = std::getenv("MEMPROBE_TEMPLATES");
        env != nullptr && *env != '\0') {
      templates_dir = env;
    } else {
      templates_dir = "core/templates";
    }
  }
  rt.templates = std::make_shared<const TemplateRegistry>(
      TemplateRegistry::load_dir(templates_dir));

  auto make_transport = [&]() -> std::unique_ptr<HttpTransport> {
    return transport_factory ? transport_factory() : nullptr;
  };

  if (config.scorer.type == ScorerSpec::Type::kNgram) {
    std::vector<Document> train_docs;
    if (config.scorer.train == "self") {
      train_docs = rt.dataset.documents();
    } else {
      train_docs = load_dataset(config.scorer.train).documents();
    }
    rt.ngram = std::make_shared<const NGramModel>(
        train_ngram(train_docs, config.scorer.order, config.scorer.alpha));
    rt.scorer = rt.ngram.get();
  } else {
    ExternalScorer::Config sc;
    sc.url = config.scorer.url;
    sc.top_n = config.scorer.top_n;
    rt.external = std::make_unique<ExternalScorer>(sc, make_transport());
    rt.scorer = rt.external.get();
  }

  rt.cache = std::make_unique<ResponseCache>(config.resolved_cache_path());

  if (config.target.type == TargetSpec::Type::kStub) {
    if (!rt.ngram) {
      throw ConfigError(
          "the stub target needs the builtin n-gram scorer as its base "
          "model");
    }
    StubModel::Options opts;
    opts.recall_probability = config.target.recall_probability;
    opts.seed = config.seed;
    StubModel stub(rt.ngram, rt.templates, opts);
    if (!config.target.contaminate_path.empty()) {
      auto docs = load_dataset(config.target.contaminate_path);
      stub = contaminate(stub, docs.documents());
    }
    rt.stub = std::make_unique<StubModel>(std::move(stub));
    rt.target = rt.stub.get();
  } else {
    rt.http_target = std::make_unique<ChatClient>(
        config.target.endpoint, rt.cache.get(), make_transport());
    rt.target = rt.http_target.get();
  }

  for (const EndpointConfig& f : config.filter_models) {
    rt.filters.push_back(
        std::make_unique<ChatClient>(f, rt.cache.get(), make_transport()));
  }
  return rt;
}

std::vector<ProbeOutcome> execute_probes(
    const LabeledDataset& dataset,
    const std::vector<CandidateToken>& candidates, const PromptTemplate& tpl,
    CompletionBackend& target) {
  std::vector<Probe> probes;
  probes.reserve(candidates.size());
  for (const CandidateToken& c : candidates) {
    if (c.filtered_out) {
      continue;
    }
    const Document* doc = dataset.find(c.doc_id);
    if (doc == nullptr) {
      throw SchemaError("candidate references unknown document \"" +
                        c.doc_id + "\"");
    }
    probes.push_back(build_probe(*doc, c, tpl));
  }

  std::vector<std::string> prompts;
  prompts.reserve(probes.size());
  for (const Probe& p : probes) {
    prompts.push_back(p.prompt);
  }
  std::vector<BatchResult> results = run_batch(target, prompts);

  std::vector<ProbeOutcome> outcomes;
  outcomes.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Probe& p = probes[i];
    ProbeOutcome o;
    o.doc_id = p.doc_id;
    o.position = p.candidate.position;
    o.strategy = std::string(strategy_name(p.candidate.strategy));
    o.template_id = p.template_id;
    o.gold = p.gold;
    if (results[i].errored) {
      o.errored = true;
      o.error = results[i].error;
    } else {
      o.raw_response = results[i].response;
      ParsedGuess guess = parse_response(o.raw_response);
      o.guess = guess.guess;
      o.parse_path = std::string(parse_path_name(guess.parse_path));
      o.matched = match_guess(guess, p.gold);
    }
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

std::vector<DocVerdict> verdicts_from_outcomes(
    const LabeledDataset& dataset, const std::vector<ProbeOutcome>& outcomes,
    std::size_t min_matches) {
  std::map<std::string, std::vector<bool>> by_doc;
  for (const ProbeOutcome& o : outcomes) {
    if (o.errored) {
      continue;  // an errored probe is missing evidence, not a miss
    }
    by_doc[o.doc_id].push_back(o.matched);
  }
  std::vector<DocVerdict> verdicts;
  verdicts.reserve(dataset.size());
  for (const Document& doc : dataset.documents()) {
    auto it = by_doc.find(doc.id);
    verdicts.push_back(make_verdict(
        doc.id, it == by_doc.end() ? std::vector<bool>{} : it->second,
        min_matches));
  }
  return verdicts;
}

namespace {

// Shared by cmd_select and cmd_contaminate: candidates for one document
// under one strategy.
std::vector<CandidateToken> candidates_for(
    const Document& doc, Strategy strategy, const PipelineConfig& config,
    const PipelineRuntime& rt, CompletionBackend* informative_backend) {
  SelectionConfig selection = config.selection;
  selection.strategy = strategy;
  switch (strategy) {
    case Strategy::kProb:
    case Strategy::kRank: {
      auto scores = score_document(*rt.scorer, doc);
      return select_candidates(doc, scores, selection);
    }
    case Strategy::kPerson: {
      auto candidates = detect_person_tokens(doc);
      if (rt.scorer != nullptr) {
        auto scores = score_document(*rt.scorer, doc);
        for (CandidateToken& c : candidates) {
          c.logprob = scores[c.position].logprob;
          c.rank = scores[c.position].rank;
        }
      }
      if (candidates.size() > selection.max_candidates) {
        candidates.resize(selection.max_candidates);
      }
      return candidates;
    }
    case Strategy::kInformativeWord: {
      if (informative_backend == nullptr) {
        throw ConfigError(
            "the InformativeWord strategy needs an informative_model "
            "endpoint (or a stub target)");
      }
      return select_informative_words(
          doc, *informative_backend,
          rt.templates->get(TemplateId::kInformativeWords),
          selection.max_candidates);
    }
  }
  return {};
}

int probe_error_exit(const std::vector<ProbeOutcome>& outcomes) {
  bool any_errored = std::any_of(outcomes.begin(), outcomes.end(),
                                 [](const ProbeOutcome& o) { return o.errored; });
  return any_errored ? kExitProbeErrors : kExitOk;
}

}  // namespace

int cmd_select(const PipelineConfig& config) {
  PipelineRuntime rt = build_runtime(config);
  ensure_dir(config.out_dir);

  std::unique_ptr<ChatClient> informative_client;
  CompletionBackend* informative_backend = nullptr;
  if (config.informative_model) {
    informative_client = std::make_unique<ChatClient>(
        *config.informative_model, rt.cache.get());
    informative_backend = informative_client.get();
  } else if (rt.stub) {
    informative_backend = rt.stub.get();
  }

  std::vector<nlohmann::json> rows;
  std::size_t candidate_count = 0;
  std::size_t skipped_docs = 0;
  for (const Document& doc : rt.dataset.documents()) {
    std::vector<CandidateToken> candidates;
    try {
      candidates = candidates_for(doc, config.selection.strategy, config, rt,
                                  informative_backend);
    } catch (const EndpointError& err) {
      std::cerr << "warning: skipping document \"" << doc.id
                << "\": " << err.what() << "\n";
      ++skipped_docs;
      continue;
    }
    for (const CandidateToken& c : candidates) {
      rows.push_back(candidate_to_json(c));
      ++candidate_count;
    }
  }
  write_jsonl(config.candidates_path(), rows);

  nlohmann::json meta;
  meta["documents"] = rt.dataset.size();
  meta["documents_skipped"] = skipped_docs;
  meta["candidates"] = candidate_count;
  meta["strategy"] = std::string(strategy_name(config.selection.strategy));
  ClassCounts counts = rt.dataset.class_counts();
  meta["class_counts"] = {{"members", counts.members},
                          {"non_members", counts.non_members},
                          {"unlabeled", counts.unlabeled}};
  if (rt.ngram) {
    // Rank thresholds are relative to this scorer's vocabulary.
    meta["scorer"] = {{"type", "ngram"},
                      {"order", rt.ngram->order()},
                      {"alpha", rt.ngram->alpha()},
                      {"vocab_size", rt.ngram->vocab().size()}};
  } else {
    meta["scorer"] = {{"type", "http"}, {"url", config.scorer.url}};
  }
  write_text(config.out_dir / "select_report.json", meta.dump(2) + "\n");
  std::cout << "selected " << candidate_count << " candidates from "
            << rt.dataset.size() << " documents\n";
  return skipped_docs > 0 ? kExitProbeErrors : kExitOk;
}

int cmd_filter(const PipelineConfig& config,
               const std::filesystem::path& candidates_path) {
  PipelineRuntime rt = build_runtime(config);
  if (rt.filters.empty()) {
    throw ConfigError("no filter_models configured");
  }
  auto path = candidates_path.empty() ? config.candidates_path()
                                      : candidates_path;
  std::vector<CandidateToken> candidates = load_candidates(path);

  std::vector<CompletionBackend*> filters;
  for (const auto& f : rt.filters) {
    filters.push_back(f.get());
  }
  const PromptTemplate& guess_tpl = rt.templates->get(TemplateId::kFilterGuess);

  // Filter per document so each probe is built against its own source text.
  std::map<std::string, std::vector<CandidateToken>> by_doc;
  std::vector<std::string> doc_order;
  for (CandidateToken& c : candidates) {
    if (by_doc.find(c.doc_id) == by_doc.end()) {
      doc_order.push_back(c.doc_id);
    }
    by_doc[c.doc_id].push_back(std::move(c));
  }

  std::vector<nlohmann::json> rows;
  std::size_t dropped = 0, errors = 0;
  for (const std::string& doc_id : doc_order) {
    const Document* doc = rt.dataset.find(doc_id);
    if (doc == nullptr) {
      throw SchemaError("candidate references unknown document \"" + doc_id +
                        "\"");
    }
    auto filtered =
        apply_knowledge_filter(std::move(by_doc[doc_id]), *doc, filters,
                               guess_tpl);
    for (const CandidateToken& c : filtered) {
      dropped += c.filtered_out ? 1 : 0;
      errors += c.filter_error ? 1 : 0;
      rows.push_back(candidate_to_json(c));
    }
  }
  write_jsonl(config.out_dir / "candidates_filtered.jsonl", rows);
  std::cout << "filtered " << rows.size() << " candidates: " << dropped
            << " dropped, " << errors << " endpoint errors\n";
  return errors > 0 ? kExitProbeErrors : kExitOk;
}

int cmd_probe(const PipelineConfig& config,
              const std::filesystem::path& candidates_path) {
  PipelineRuntime rt = build_runtime(config);
  auto path = candidates_path.empty() ? config.candidates_path()
                                      : candidates_path;
  std::vector<CandidateToken> candidates = load_candidates(path);
  const PromptTemplate& tpl = rt.templates->get(config.probe_template);

  std::vector<nlohmann::json> probe_rows;
  for (const CandidateToken& c : candidates) {
    if (c.filtered_out) {
      continue;
    }
    const Document* doc = rt.dataset.find(c.doc_id);
    if (doc == nullptr) {
      throw SchemaError("candidate references unknown document \"" +
                        c.doc_id + "\"");
    }
    probe_rows.push_back(probe_to_json(build_probe(*doc, c, tpl)));
  }
  write_jsonl(config.probes_path(), probe_rows);

  std::vector<ProbeOutcome> outcomes =
      execute_probes(rt.dataset, candidates, tpl, *rt.target);
  std::vector<nlohmann::json> rows;
  rows.reserve(outcomes.size());
  std::size_t matched = 0, errored = 0;
  for (const ProbeOutcome& o : outcomes) {
    matched += o.matched ? 1 : 0;
    errored += o.errored ? 1 : 0;
    rows.push_back(outcome_to_json(o));
  }
  write_jsonl(config.outcomes_path(), rows);
  std::cout << "executed " << outcomes.size() << " probes: " << matched
            << " matched, " << errored << " errored\n";
  return probe_error_exit(outcomes);
}

int cmd_report(const PipelineConfig& config,
               const std::filesystem::path& outcomes_path) {
  PipelineRuntime rt = build_runtime(config);
  auto path =
      outcomes_path.empty() ? config.outcomes_path() : outcomes_path;
  std::vector<ProbeOutcome> outcomes = load_outcomes(path);

  std::unordered_map<std::string, int> labels;
  for (const Document& doc : rt.dataset.documents()) {
    if (!doc.label) {
      throw ConfigError("document \"" + doc.id +
                        "\" has no membership label; reports need a fully "
                        "labeled dataset");
    }
    labels[doc.id] = *doc.label;
  }

  std::map<std::string, std::vector<ProbeOutcome>> by_strategy;
  for (const ProbeOutcome& o : outcomes) {
    by_strategy[o.strategy].push_back(o);
  }

  std::vector<ReportRow> rows;
  nlohmann::json out_rows = nlohmann::json::array();
  for (const auto& [strategy, strategy_outcomes] : by_strategy) {
    auto verdicts =
        verdicts_from_outcomes(rt.dataset, strategy_outcomes,
                               config.selection.min_matches_for_verdict);
    MetricsReport metrics = evaluate(verdicts, labels, config.beta);
    ReportRow row;
    row.probe = strategy == "InformativeWord" ? "TS-SLOT" : "Surprisal";
    row.token_type = strategy;
    row.metrics = metrics;
    rows.push_back(row);

    nlohmann::json r = report_json(metrics);
    r["probe"] = row.probe;
    r["token_type"] = row.token_type;
    out_rows.push_back(std::move(r));
  }

  nlohmann::json report;
  report["beta"] = config.beta;
  report["rows"] = std::move(out_rows);
  report["min_matches"] = config.selection.min_matches_for_verdict;
  write_text(config.out_dir / "report.json", report.dump(2) + "\n");
  std::string table = render_table(rows);
  write_text(config.out_dir / "report.txt", table);
  std::cout << table;
  return kExitOk;
}

int cmd_baseline(const PipelineConfig& config) {
  PipelineRuntime rt = build_runtime(config);
  ensure_dir(config.out_dir);

  const PromptTemplate& prefix_tpl =
      rt.templates->get(config.baseline.prefix_template);

  // Prefix probing wants long continuations; give an HTTP target its own
  // client with the baseline output budget instead of the cloze default.
  CompletionBackend* prefix_target = rt.target;
  std::unique_ptr<ChatClient> prefix_client;
  if (rt.http_target != nullptr) {
    EndpointConfig endpoint = config.target.endpoint;
    endpoint.max_output_tokens = config.baseline.max_output_tokens;
    prefix_client = std::make_unique<ChatClient>(endpoint, rt.cache.get());
    prefix_target = prefix_client.get();
  }

  // Prefix probing with word-level LCS against the target.
  std::vector<nlohmann::json> score_rows;
  std::vector<std::pair<std::string, double>> lcs_by_doc;
  std::size_t skipped = 0, errored = 0;
  for (const Document& doc : rt.dataset.documents()) {
    PrefixProbeResult r = prefix_probe(doc, *prefix_target, prefix_tpl,
                                       config.baseline.n_prefix_words);
    nlohmann::json row;
    row["doc_id"] = r.doc_id;
    row["method"] = "LCS";
    row["skipped"] = r.skipped;
    row["skip_reason"] = r.skip_reason;
    row["errored"] = r.errored;
    row["error"] = r.error;
    row["score"] = static_cast<double>(r.lcs_words);
    score_rows.push_back(std::move(row));
    if (r.skipped) {
      ++skipped;
    } else if (r.errored) {
      ++errored;
    } else {
      lcs_by_doc.emplace_back(doc.id, static_cast<double>(r.lcs_words));
    }
  }

  // Token-probability methods need a scorer that reflects the target. The
  // stub exposes its own probabilities; a chat endpoint does not.
  std::map<std::string, std::vector<std::pair<std::string, double>>>
      mia_by_method;
  bool mia_available = rt.stub != nullptr;
  if (mia_available) {
    for (const Document& doc : rt.dataset.documents()) {
      for (const MIAScore& s : mia_scores(doc, *rt.stub)) {
        std::string method = std::string(mia_method_name(s.method));
        if (s.k_percent) {
          method = "Min " + std::to_string(*s.k_percent) + "%";
        }
        nlohmann::json row;
        row["doc_id"] = s.doc_id;
        row["method"] = method;
        row["score"] = s.score;
        if (s.k_percent) {
          row["k_percent"] = *s.k_percent;
        }
        score_rows.push_back(std::move(row));
        mia_by_method[method].emplace_back(doc.id, s.score);
      }
    }
  }
  write_jsonl(config.out_dir / "baseline_scores.jsonl", score_rows);

  // Threshold classifiers are tuned on the holdout and evaluated on the
  // rest. This needs labels on both halves.
  ClassCounts counts = rt.dataset.class_counts();
  if (counts.unlabeled > 0 || counts.members == 0 || counts.non_members == 0) {
    std::cout << "baseline scores written; dataset is not fully labeled "
                 "with both classes, skipping threshold evaluation\n";
    return errored > 0 ? kExitProbeErrors : kExitOk;
  }
  auto [rest, holdout] =
      split_holdout(rt.dataset, config.baseline.holdout_fraction, config.seed);

  std::unordered_map<std::string, int> labels;
  for (const Document& doc : rt.dataset.documents()) {
    labels[doc.id] = *doc.label;
  }

  auto evaluate_method =
      [&](const std::string& method,
          const std::vector<std::pair<std::string, double>>& doc_scores)
      -> std::optional<std::pair<ThresholdClassifier, MetricsReport>> {
    std::unordered_map<std::string, double> by_doc(doc_scores.begin(),
                                                   doc_scores.end());
    std::vector<std::pair<double, int>> fit_points;
    for (const Document& doc : holdout.documents()) {
      auto it = by_doc.find(doc.id);
      if (it != by_doc.end()) {
        fit_points.emplace_back(it->second, *doc.label);
      }
    }
    ThresholdClassifier classifier;
    try {
      classifier = fit_threshold(fit_points, config.beta);
    } catch (const ConfigError& err) {
      std::cerr << "warning: cannot fit " << method << " threshold: "
                << err.what() << "\n";
      return std::nullopt;
    }
    MetricsReport metrics;
    metrics.beta = config.beta;
    for (const Document& doc : rest.documents()) {
      auto it = by_doc.find(doc.id);
      if (it == by_doc.end()) {
        continue;
      }
      bool predicted = classifier.predict(it->second);
      bool member = *doc.label == 1;
      if (predicted) {
        member ? ++metrics.tp : ++metrics.fp;
      } else {
        member ? ++metrics.fn : ++metrics.tn;
      }
    }
    if (metrics.tp + metrics.fp > 0) {
      metrics.precision = 100.0 * static_cast<double>(metrics.tp) /
                          static_cast<double>(metrics.tp + metrics.fp);
    }
    if (metrics.tp + metrics.fn > 0) {
      metrics.recall = 100.0 * static_cast<double>(metrics.tp) /
                       static_cast<double>(metrics.tp + metrics.fn);
    }
    metrics.f_beta = f_beta(metrics.precision, metrics.recall, config.beta);
    return std::make_pair(classifier, metrics);
  };

  std::vector<ReportRow> rows;
  nlohmann::json report_rows = nlohmann::json::array();
  if (auto fitted = evaluate_method("LCS", lcs_by_doc)) {
    write_text(config.out_dir / "classifier.json",
               fitted->first.to_json().dump(2) + "\n");
    rows.push_back({"LCS", "-", fitted->second});
    nlohmann::json r = report_json(fitted->second);
    r["probe"] = "LCS";
    r["token_type"] = "-";
    r["classifier"] = fitted->first.to_json();
    report_rows.push_back(std::move(r));
  }
  for (const auto& [method, doc_scores] : mia_by_method) {
    if (auto fitted = evaluate_method(method, doc_scores)) {
      rows.push_back({method, "-", fitted->second});
      nlohmann::json r = report_json(fitted->second);
      r["probe"] = method;
      r["token_type"] = "-";
      r["classifier"] = fitted->first.to_json();
      report_rows.push_back(std::move(r));
    }
  }

  nlohmann::json report;
  report["beta"] = config.beta;
  report["rows"] = std::move(report_rows);
  report["prefix_skipped"] = skipped;
  report["prefix_errored"] = errored;
  report["mia_available"] = mia_available;
  write_text(config.out_dir / "baseline_report.json", report.dump(2) + "\n");
  std::string table = render_table(rows);
  write_text(config.out_dir / "baseline_report.txt", table);
  std::cout << table;
  return errored > 0 ? kExitProbeErrors : kExitOk;
}

int cmd_contaminate(const PipelineConfig& config) {
  PipelineRuntime rt = build_runtime(config);
  ensure_dir(config.out_dir);
  if (!rt.ngram) {
    throw ConfigError("contaminate needs the builtin n-gram scorer");
  }

  auto [clean_half, contaminated_half] = split_holdout(
      rt.dataset, config.contaminate.contaminate_fraction, config.seed);

  StubModel::Options opts;
  opts.recall_probability = config.target.recall_probability;
  opts.seed = config.seed;
  StubModel base_stub(rt.ngram, rt.templates, opts);
  StubModel contaminated_stub =
      contaminate(base_stub, contaminated_half.documents());

  std::unordered_map<std::string, int> contamination_labels;
  std::unordered_set<std::string> contaminated_ids;
  for (const Document& d : clean_half.documents()) {
    contamination_labels[d.id] = 0;
  }
  for (const Document& d : contaminated_half.documents()) {
    contamination_labels[d.id] = 1;
    contaminated_ids.insert(d.id);
  }

  nlohmann::json report;
  report["seed"] = config.seed;
  report["n_clean"] = clean_half.size();
  report["n_contaminated"] = contaminated_half.size();
  report["recall_probability"] = config.target.recall_probability;
  nlohmann::json strategies = nlohmann::json::object();

  std::vector<ReportRow> table_rows;
  for (const std::string& spec : config.contaminate.strategies) {
    bool use_filter = spec.ends_with("+IF");
    std::string base_name =
        use_filter ? spec.substr(0, spec.size() - 3) : spec;
    Strategy strategy = strategy_from_name(base_name);

    const PromptTemplate& tpl =
        strategy == Strategy::kInformativeWord
            ? rt.templates->get(TemplateId::kContaminationSlot)
            : rt.templates->get(config.probe_template);

    std::vector<CandidateToken> all_candidates;
    for (const Document& doc : rt.dataset.documents()) {
      auto candidates =
          candidates_for(doc, strategy, config, rt, &base_stub);
      if (use_filter) {
        std::vector<CompletionBackend*> filters{&base_stub};
        candidates = apply_knowledge_filter(
            std::move(candidates), doc, filters,
            rt.templates->get(TemplateId::kFilterGuess));
      }
      for (CandidateToken& c : candidates) {
        all_candidates.push_back(std::move(c));
      }
    }

    std::vector<ProbeOutcome> outcomes =
        execute_probes(rt.dataset, all_candidates, tpl, contaminated_stub);

    std::vector<bool> clean_outcomes, contaminated_outcomes;
    for (const ProbeOutcome& o : outcomes) {
      if (o.errored) {
        continue;
      }
      if (contaminated_ids.count(o.doc_id) > 0) {
        contaminated_outcomes.push_back(o.matched);
      } else {
        clean_outcomes.push_back(o.matched);
      }
    }
    double em_clean = em_or_zero(clean_outcomes);
    double em_contaminated = em_or_zero(contaminated_outcomes);

    auto verdicts = verdicts_from_outcomes(
        rt.dataset, outcomes, config.selection.min_matches_for_verdict);
    MetricsReport metrics =
        evaluate(verdicts, contamination_labels, config.beta);

    nlohmann::json s;
    s["n_probes_clean"] = clean_outcomes.size();
    s["n_probes_contaminated"] = contaminated_outcomes.size();
    s["em_clean"] = em_clean;
    s["em_contaminated"] = em_contaminated;
    s["delta_em"] = delta_em(em_contaminated, em_clean);
    s["verdicts"] = report_json(metrics);
    strategies[spec] = std::move(s);

    MetricsReport em_row;
    em_row.beta = config.beta;
    em_row.precision = metrics.precision;
    em_row.recall = metrics.recall;
    em_row.f_beta = metrics.f_beta;
    table_rows.push_back(
        {spec, std::string(strategy_name(strategy)), em_row});

    std::vector<nlohmann::json> outcome_rows;
    outcome_rows.reserve(outcomes.size());
    for (const ProbeOutcome& o : outcomes) {
      outcome_rows.push_back(outcome_to_json(o));
    }
    write_jsonl(config.out_dir /
                    ("contaminate_outcomes_" + sanitize_for_filename(spec) +
                     ".jsonl"),
                outcome_rows);

    std::cout << spec << ": EM clean " << em_clean << "%, EM contaminated "
              << em_contaminated << "%, delta "
              << delta_em(em_contaminated, em_clean) << " points\n";
  }

  report["strategies"] = std::move(strategies);
  write_text(config.out_dir / "contamination_report.json",
             report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace memprobe
