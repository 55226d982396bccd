#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace loopcompat::eval {

struct ClassificationMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// 2TP / (2TP + FP + FN); 0 when there are no positives at all.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Predicts positive when score >= threshold. labels are 1 (compatible) or 0.
/// An unbalanced set is InvalidInput unless allow_unbalanced is set.
ClassificationMetrics classification_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                                             double threshold, bool allow_unbalanced = false);

/// Threshold maximizing F1 among the 0th..100th percentiles of `scores`
/// (linear interpolation); the lowest such threshold wins ties.
double select_threshold(const std::vector<double>& scores, const std::vector<int>& labels);

/// Scores of one ranking task's candidates and the position of the target.
struct TaskScores {
  std::vector<double> scores;
  std::size_t target = 0;
};

struct TaskRank {
  std::size_t rank = 0;  // 1-based
  bool tied = false;     // some other candidate scored exactly the target's score
};

/// Rank after a stable descending sort: candidates with equal score keep
/// their input order.
TaskRank rank_of(const TaskScores& task);

struct RankingMetrics {
  double avg_rank = 0.0;
  double top10 = 0.0, top30 = 0.0, top50 = 0.0;
  std::size_t tasks = 0;
  std::size_t tied_tasks = 0;
  std::vector<std::size_t> ranks;
};

/// Throws InvalidInput on an empty task list or a target index out of range.
RankingMetrics ranking_metrics(const std::vector<TaskScores>& tasks);

}  // namespace loopcompat::eval
