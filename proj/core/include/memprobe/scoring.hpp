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

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace memprobe {

/// Per-document reconstruction tally and memorization decision. A document
/// is memorized when at least `min_matches` probes were reconstructed; it
/// abstains when fewer than `min_matches` probes exist at all (abstained
/// documents count as negative predictions but are tallied separately).
struct DocVerdict {
  std::string doc_id;
  std::size_t n_probes = 0;
  std::size_t n_matches = 0;
  bool memorized = false;
  bool abstained = false;
};

DocVerdict make_verdict(std::string doc_id, const std::vector<bool>& outcomes,
                        std::size_t min_matches);

/// F_beta = (1 + beta^2) P R / (beta^2 P + R) over percentages; 0 when both
/// P and R are 0.
double f_beta(double precision, double recall, double beta);

/// 100 * matches / total. Throws SchemaError on an empty list.
double exact_match_rate(const std::vector<bool>& outcomes);

/// EM(contaminated) - EM(clean), in percentage points.
double delta_em(double em_contaminated, double em_clean);

/// Precision / recall / F_beta over document verdicts, percentages in
/// [0,100]. em_rate is the probe-level exact-match rate across all verdicts.
struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;
  double beta = 0.1;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double em_rate = 0.0;
  std::size_t n_abstained = 0;
};

/// Confusion counts with memorized-as-positive against the given membership
/// labels (doc_id -> 0/1). Every verdict must have a label; missing labels
/// raise SchemaError.
MetricsReport evaluate(const std::vector<DocVerdict>& verdicts,
                       const std::unordered_map<std::string, int>& labels,
                       double beta = 0.1);

nlohmann::json report_json(const MetricsReport& report);

/// One row of the human-readable report table.
struct ReportRow {
  std::string probe;       // e.g. "Surprisal"
  std::string token_type;  // e.g. "Prob"
  MetricsReport metrics;
};

/// Aligned-column table: Probe, Token Type, P, R, F_beta. Values rounded to
/// one decimal place.
std::string render_table(const std::vector<ReportRow>& rows);

}  // namespace memprobe
