#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "loopcompat/eval/metrics.hpp"

namespace loopcompat::eval {

/// One row of the published results for the full-scale corpus.
struct ReferenceRow {
  std::string model;     // "cnn" or "snn"
  std::string strategy;  // negative sampling strategy used for training
  double accuracy, f1, avg_rank, top10, top30, top50;
};

const std::vector<ReferenceRow>& reference_results();
std::optional<ReferenceRow> reference_for(const std::string& model, const std::string& strategy);

struct EvalReport {
  std::string scorer;             // cnn, snn or amu
  std::string negative_strategy;  // training negatives ("" for amu)
  std::uint64_t seed = 0;
  std::size_t candidates = 0;
  double threshold = 0.0;
  std::string threshold_rule;
  std::optional<ClassificationMetrics> classification;
  std::optional<RankingMetrics> ranking;
};

nlohmann::json to_json(const EvalReport& report);

/// Plain-text table with accuracy, F1, average rank and top-k columns, plus the
/// reference row when one exists.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace loopcompat::eval
