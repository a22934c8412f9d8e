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

#include "memprobe/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "memprobe/error.hpp"

namespace memprobe {

DocVerdict make_verdict(std::string doc_id, const std::vector<bool>& outcomes,
                        std::size_t min_matches) {
  if (min_matches < 1) {
    throw ConfigError("min_matches must be >= 1");
  }
  DocVerdict v;
  v.doc_id = std::move(doc_id);
  v.n_probes = outcomes.size();
  v.n_matches = static_cast<std::size_t>(
      std::count(outcomes.begin(), outcomes.end(), true));
  v.abstained = v.n_probes < min_matches;
  v.memorized = !v.abstained && v.n_matches >= min_matches;
  return v;
}

double f_beta(double precision, double recall, double beta) {
  if (precision <= 0.0 && recall <= 0.0) {
    return 0.0;
  }
  double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

double exact_match_rate(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) {
    throw SchemaError("exact_match_rate over an empty outcome list");
  }
  auto matches = std::count(outcomes.begin(), outcomes.end(), true);
  return 100.0 * static_cast<double>(matches) /
         static_cast<double>(outcomes.size());
}

double delta_em(double em_contaminated, double em_clean) {
  return em_contaminated - em_clean;
}

MetricsReport evaluate(const std::vector<DocVerdict>& verdicts,
                       const std::unordered_map<std::string, int>& labels,
                       double beta) {
  MetricsReport report;
  report.beta = beta;
  std::size_t total_probes = 0;
  std::size_t total_matches = 0;
  for (const DocVerdict& v : verdicts) {
    auto it = labels.find(v.doc_id);
    if (it == labels.end()) {
      throw SchemaError("no membership label for document \"" + v.doc_id +
                        "\"");
    }
    bool member = it->second == 1;
    if (v.memorized) {
      member ? ++report.tp : ++report.fp;
    } else {
      member ? ++report.fn : ++report.tn;
    }
    if (v.abstained) {
      ++report.n_abstained;
    }
    total_probes += v.n_probes;
    total_matches += v.n_matches;
  }
  if (report.tp + report.fp > 0) {
    report.precision = 100.0 * static_cast<double>(report.tp) /
                       static_cast<double>(report.tp + report.fp);
  }
  if (report.tp + report.fn > 0) {
    report.recall = 100.0 * static_cast<double>(report.tp) /
                    static_cast<double>(report.tp + report.fn);
  }
  report.f_beta = f_beta(report.precision, report.recall, beta);
  if (total_probes > 0) {
    report.em_rate = 100.0 * static_cast<double>(total_matches) /
                     static_cast<double>(total_probes);
  }
  return report;
}

nlohmann::json report_json(const MetricsReport& report) {
  // Percentages are reported at one-decimal precision, like the tables.
  auto round1 = [](double v) { return std::round(v * 10.0) / 10.0; };
  nlohmann::json j;
  j["precision"] = round1(report.precision);
  j["recall"] = round1(report.recall);
  j["f_beta"] = round1(report.f_beta);
  j["beta"] = report.beta;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["tn"] = report.tn;
  j["em_rate"] = round1(report.em_rate);
  j["n_abstained"] = report.n_abstained;
  return j;
}

std::string render_table(const std::vector<ReportRow>& rows) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return std::string(buf);
  };

  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"Probe", "Token Type", "P", "R", "F_b"});
  for (const ReportRow& row : rows) {
    cells.push_back({row.probe, row.token_type, fmt(row.metrics.precision),
                     fmt(row.metrics.recall), fmt(row.metrics.f_beta)});
  }

  std::array<std::size_t, 5> widths{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 5; ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }

  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      out << cells[r][c];
      if (c + 1 < 5) {
        out << std::string(widths[c] - cells[r][c].size() + 2, ' ');
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < 5; ++c) {
        total += widths[c] + (c + 1 < 5 ? 2 : 0);
      }
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace memprobe
