#pragma once

#include <string>
#include <vector>

#include "loopcompat/dedup/loop_pair.hpp"
#include "loopcompat/eval/metrics.hpp"
#include "loopcompat/eval/tasks.hpp"

namespace loopcompat::eval {

/// Anything that rates how well two loops fit together; higher means more
/// compatible.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const std::string& source, const std::string& target) = 0;
  /// Batch form; the default scores candidates one at a time.
  virtual std::vector<double> score_many(const std::string& source, const std::vector<std::string>& targets);
};

std::vector<double> score_pairs(PairScorer& scorer, const std::vector<dedup::LoopPair>& pairs);

ClassificationMetrics classification_eval(PairScorer& scorer, const std::vector<dedup::LoopPair>& pairs,
                                          double threshold, bool allow_unbalanced = false);

RankingMetrics ranking_eval(PairScorer& scorer, const std::vector<RankingTask>& tasks,
                            std::size_t candidates = kCandidates);

}  // namespace loopcompat::eval
