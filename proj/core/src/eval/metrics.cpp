#include "loopcompat/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "loopcompat/error.hpp"

namespace loopcompat::eval {

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

ClassificationMetrics classification_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                                             double threshold, bool allow_unbalanced) {
  require(scores.size() == labels.size(), ErrorKind::InvalidInput, "scores and labels differ in length");
  require(!scores.empty(), ErrorKind::InvalidInput, "classification set is empty");
  std::size_t positives = 0;
  for (int y : labels) {
    require(y == 0 || y == 1, ErrorKind::InvalidInput, "labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (!allow_unbalanced) {
    require(2 * positives == labels.size(), ErrorKind::InvalidInput,
            "classification set is not balanced (" + std::to_string(positives) + " positives of " +
                std::to_string(labels.size()) + ")");
  }
  ClassificationMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), ErrorKind::InvalidInput, "non-finite score");
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++m.tp : ++m.fn;
    } else {
      predicted ? ++m.fp : ++m.tn;
    }
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(scores.size());
  m.f1 = f1_score(m.tp, m.fp, m.fn);
  return m;
}

double select_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(!scores.empty(), ErrorKind::InsufficientData, "threshold selection needs scores");
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  double best_threshold = sorted.front();
  double best_f1 = -1.0;
  for (int q = 0; q <= 100; ++q) {
    const double pos = static_cast<double>(q) / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double t = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    const double f1 = classification_metrics(scores, labels, t, true).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = t;
    }
  }
  return best_threshold;
}

TaskRank rank_of(const TaskScores& task) {
  require(task.target < task.scores.size(), ErrorKind::InvalidInput, "ranking target index out of range");
  const double target = task.scores[task.target];
  require(std::isfinite(target), ErrorKind::InvalidInput, "non-finite score");
  TaskRank r{1, false};
  for (std::size_t i = 0; i < task.scores.size(); ++i) {
    if (i == task.target) continue;
    const double s = task.scores[i];
    require(std::isfinite(s), ErrorKind::InvalidInput, "non-finite score");
    if (s > target) {
      ++r.rank;
    } else if (s == target) {
      r.tied = true;
      if (i < task.target) ++r.rank;
    }
  }
  return r;
}

RankingMetrics ranking_metrics(const std::vector<TaskScores>& tasks) {
  require(!tasks.empty(), ErrorKind::InvalidInput, "no ranking tasks");
  RankingMetrics m;
  m.tasks = tasks.size();
  double sum = 0.0;
  std::size_t in10 = 0, in30 = 0, in50 = 0;
  for (const auto& t : tasks) {
    const TaskRank r = rank_of(t);
    m.ranks.push_back(r.rank);
    sum += static_cast<double>(r.rank);
    in10 += r.rank <= 10;
    in30 += r.rank <= 30;
    in50 += r.rank <= 50;
    m.tied_tasks += r.tied;
  }
  const auto n = static_cast<double>(tasks.size());
  m.avg_rank = sum / n;
  m.top10 = static_cast<double>(in10) / n;
  m.top30 = static_cast<double>(in30) / n;
  m.top50 = static_cast<double>(in50) / n;
  return m;
}

}  // namespace loopcompat::eval
