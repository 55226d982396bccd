#include "loopcompat/eval/tasks.hpp"

#include <algorithm>
#include <set>

#include "loopcompat/error.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::eval {

std::size_t RankingTask::target_index() const {
  const auto it = std::find(candidates.begin(), candidates.end(), target_id);
  require(it != candidates.end(), ErrorKind::InvalidInput, "task for " + query_id + " lacks its target");
  return static_cast<std::size_t>(it - candidates.begin());
}

void validate(const RankingTask& task, std::size_t expected) {
  const std::string who = "ranking task for '" + task.query_id + "'";
  require(task.candidates.size() == expected, ErrorKind::InvalidInput,
          who + " has " + std::to_string(task.candidates.size()) + " candidates, expected " +
              std::to_string(expected));
  std::set<std::string> seen;
  for (const auto& c : task.candidates) {
    require(seen.insert(c).second, ErrorKind::InvalidInput, who + " repeats candidate " + c);
    require(c != task.query_id, ErrorKind::InvalidInput, who + " offers the query as a candidate");
  }
  require(seen.count(task.target_id) == 1, ErrorKind::InvalidInput, who + " does not contain its target");
}

std::vector<RankingTask> build_ranking_tasks(const std::vector<dedup::LoopPair>& positives,
                                             const std::vector<std::string>& pool, std::uint64_t seed,
                                             std::size_t candidates) {
  require(candidates >= 1, ErrorKind::InvalidInput, "at least one candidate is required");
  std::vector<std::string> unique_pool = pool;
  std::sort(unique_pool.begin(), unique_pool.end());
  unique_pool.erase(std::unique(unique_pool.begin(), unique_pool.end()), unique_pool.end());

  std::vector<RankingTask> tasks;
  tasks.reserve(positives.size());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& p = positives[i];
    require(p.label == dedup::PairLabel::Positive, ErrorKind::InvalidInput,
            "ranking tasks are built from positive pairs, got " + p.pair_id);
    std::vector<std::string> distractors;
    for (const auto& id : unique_pool) {
      if (id != p.loop_a && id != p.loop_b) distractors.push_back(id);
    }
    if (distractors.size() < candidates - 1) {
      fail(ErrorKind::InsufficientData, "pool offers " + std::to_string(distractors.size()) + " distractors for " +
                                            p.pair_id + ", need " + std::to_string(candidates - 1));
    }
    Rng rng(mix_seed(seed, fnv1a(p.pair_id)));
    // Partial Fisher-Yates: the first candidates-1 entries become the sample.
    for (std::size_t k = 0; k + 1 < candidates; ++k) {
      std::swap(distractors[k], distractors[k + rng.index(distractors.size() - k)]);
    }
    distractors.resize(candidates - 1);

    RankingTask task;
    task.query_id = p.loop_a;
    task.target_id = p.loop_b;
    task.candidates = std::move(distractors);
    task.candidates.push_back(p.loop_b);
    rng.shuffle(task.candidates);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<dedup::LoopPair> build_classification_set(const std::vector<dedup::LoopPair>& positives,
                                                      const std::vector<dedup::LoopPair>& negatives) {
  require(positives.size() == negatives.size(), ErrorKind::InvalidInput,
          "classification set needs as many negatives (" + std::to_string(negatives.size()) + ") as positives (" +
              std::to_string(positives.size()) + ")");
  std::vector<dedup::LoopPair> out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

}  // namespace loopcompat::eval
