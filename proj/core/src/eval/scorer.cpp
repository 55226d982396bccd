#include "loopcompat/eval/scorer.hpp"

#include "loopcompat/error.hpp"

namespace loopcompat::eval {

std::vector<double> PairScorer::score_many(const std::string& source, const std::vector<std::string>& targets) {
  std::vector<double> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(score(source, t));
  return out;
}

std::vector<double> score_pairs(PairScorer& scorer, const std::vector<dedup::LoopPair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(scorer.score(p.loop_a, p.loop_b));
  return out;
}

ClassificationMetrics classification_eval(PairScorer& scorer, const std::vector<dedup::LoopPair>& pairs,
                                          double threshold, bool allow_unbalanced) {
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) labels.push_back(p.label == dedup::PairLabel::Positive ? 1 : 0);
  return classification_metrics(score_pairs(scorer, pairs), labels, threshold, allow_unbalanced);
}

RankingMetrics ranking_eval(PairScorer& scorer, const std::vector<RankingTask>& tasks, std::size_t candidates) {
  std::vector<TaskScores> scored;
  scored.reserve(tasks.size());
  for (const auto& task : tasks) {
    validate(task, candidates);
    scored.push_back(TaskScores{scorer.score_many(task.query_id, task.candidates), task.target_index()});
    require(scored.back().scores.size() == task.candidates.size(), ErrorKind::InvalidInput,
            scorer.name() + " returned the wrong number of scores");
  }
  return ranking_metrics(scored);
}

}  // namespace loopcompat::eval
