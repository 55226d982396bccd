#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loopcompat/dedup/loop_pair.hpp"

namespace loopcompat::eval {

inline constexpr std::size_t kCandidates = 100;

struct RankingTask {
  std::string query_id;
  std::string target_id;
  std::vector<std::string> candidates;  // includes the target exactly once

  std::size_t target_index() const;
};

/// InvalidInput unless the task has `expected` unique candidates, contains its
/// target once and does not offer the query as a candidate.
void validate(const RankingTask& task, std::size_t expected = kCandidates);

/// One task per positive pair: loop_a queries, loop_b is the target, and the
/// remaining candidates are drawn without replacement from `pool` (excluding
/// query and target). Candidate order is shuffled. InsufficientData when the
/// pool is too small.
std::vector<RankingTask> build_ranking_tasks(const std::vector<dedup::LoopPair>& positives,
                                             const std::vector<std::string>& pool, std::uint64_t seed,
                                             std::size_t candidates = kCandidates);

/// Positives followed by negatives; InvalidInput unless the counts match.
std::vector<dedup::LoopPair> build_classification_set(const std::vector<dedup::LoopPair>& positives,
                                                      const std::vector<dedup::LoopPair>& negatives);

}  // namespace loopcompat::eval
