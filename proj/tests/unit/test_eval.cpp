#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "loopcompat/error.hpp"
#include "loopcompat/eval/metrics.hpp"
#include "loopcompat/eval/report.hpp"
#include "loopcompat/eval/scorer.hpp"
#include "loopcompat/eval/tasks.hpp"
#include "loopcompat/random.hpp"

using namespace loopcompat;
using namespace loopcompat::eval;
using dedup::LoopPair;

namespace {

std::vector<TaskScores> random_tasks(std::size_t n, std::size_t candidates, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TaskScores> tasks(n);
  for (auto& t : tasks) {
    t.scores.resize(candidates);
    for (double& s : t.scores) s = rng.uniform();
    t.target = rng.index(candidates);
  }
  return tasks;
}

LoopPair pair(const std::string& a, const std::string& b, bool positive) {
  LoopPair p;
  p.loop_a = a;
  p.loop_b = b;
  p.pair_id = a + "+" + b;
  p.label = positive ? dedup::PairLabel::Positive : dedup::PairLabel::Negative;
  return p;
}

// Scores by a lookup table keyed on "source|target"; unknown pairs score 0.
class TableScorer final : public PairScorer {
 public:
  std::map<std::string, double> table;
  std::string name() const override { return "table"; }
  double score(const std::string& s, const std::string& t) override {
    auto it = table.find(s + "|" + t);
    return it == table.end() ? 0.0 : it->second;
  }
};

}  // namespace

TEST(Classification, F1AndCounts) {
  EXPECT_NEAR(f1_score(1, 1, 0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(f1_score(0, 3, 0), 0.0);
  EXPECT_EQ(f1_score(0, 0, 0), 0.0);
  const auto m = classification_metrics({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}, 0.5);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
  // Threshold is inclusive.
  EXPECT_EQ(classification_metrics({0.5, 0.2}, {1, 0}, 0.5).tp, 1u);
  try {
    classification_metrics({0.5, 0.2, 0.1}, {1, 0, 0}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  EXPECT_NO_THROW(classification_metrics({0.5, 0.2, 0.1}, {1, 0, 0}, 0.5, true));
  EXPECT_THROW(classification_metrics({0.5}, {1, 0}, 0.5, true), Error);
}

TEST(Classification, ThresholdSelection) {
  const std::vector<double> s{0.1, 0.35, 0.4, 0.8, 0.2, 0.9, 0.65, 0.3, 0.55, 0.05};
  const std::vector<int> y{0, 1, 0, 1, 0, 1, 1, 0, 1, 0};
  // Linear-interpolated 3rd percentile gives the best F1 (10/11) first.
  const double t = select_threshold(s, y);
  EXPECT_NEAR(t, 0.303, 1e-12);
  EXPECT_NEAR(classification_metrics(s, y, t).f1, 10.0 / 11.0, 1e-12);
  // Perfectly separable scores.
  EXPECT_EQ(classification_metrics({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0},
                                   select_threshold({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}))
                .f1,
            1.0);
}

TEST(Ranking, RankOfWithTies) {
  EXPECT_EQ(rank_of({{0.2, 0.9, 0.5}, 1}).rank, 1u);
  const TaskRank r = rank_of({{1.0, 1.0, 0.5}, 1});
  EXPECT_EQ(r.rank, 2u);
  EXPECT_TRUE(r.tied);
  EXPECT_EQ(rank_of({{1.0, 1.0, 0.5}, 0}).rank, 1u);
  EXPECT_EQ(rank_of({{0.3, 0.2, 0.1}, 2}).rank, 3u);
  EXPECT_FALSE(rank_of({{0.3, 0.2, 0.1}, 2}).tied);
  EXPECT_THROW(rank_of({{0.3}, 1}), Error);
  EXPECT_THROW(rank_of({{0.3, std::nan("")}, 0}), Error);
}

TEST(Ranking, OracleAndAntiOracle) {
  auto tasks = random_tasks(50, 100, 1);
  for (auto& t : tasks) t.scores[t.target] = 2.0;
  const RankingMetrics oracle = ranking_metrics(tasks);
  EXPECT_EQ(oracle.avg_rank, 1.0);
  EXPECT_EQ(oracle.top10, 1.0);
  EXPECT_EQ(oracle.top50, 1.0);
  EXPECT_EQ(oracle.tied_tasks, 0u);
  for (auto& t : tasks) t.scores[t.target] = -1.0;
  const RankingMetrics anti = ranking_metrics(tasks);
  EXPECT_EQ(anti.avg_rank, 100.0);
  EXPECT_EQ(anti.top50, 0.0);
  EXPECT_THROW(ranking_metrics({}), Error);
}

TEST(Ranking, TopKCounts) {
  std::vector<TaskScores> tasks;
  for (std::size_t rank : {1u, 10u, 11u, 30u, 31u, 50u, 51u, 100u}) {
    TaskScores t;
    t.scores.resize(100);
    for (std::size_t i = 0; i < 100; ++i) t.scores[i] = 100.0 - static_cast<double>(i);
    t.target = rank - 1;
    tasks.push_back(t);
  }
  const RankingMetrics m = ranking_metrics(tasks);
  EXPECT_EQ(m.ranks, (std::vector<std::size_t>{1, 10, 11, 30, 31, 50, 51, 100}));
  EXPECT_DOUBLE_EQ(m.avg_rank, (1 + 10 + 11 + 30 + 31 + 50 + 51 + 100) / 8.0);
  EXPECT_DOUBLE_EQ(m.top10, 2.0 / 8.0);
  EXPECT_DOUBLE_EQ(m.top30, 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(m.top50, 6.0 / 8.0);
}

TEST(Ranking, UniformScorerCalibration) {
  const RankingMetrics m = ranking_metrics(random_tasks(1000, 100, 7));
  EXPECT_NEAR(m.avg_rank, 50.5, 2.0);
  EXPECT_NEAR(m.top10, 0.10, 0.04);
  EXPECT_NEAR(m.top50, 0.50, 0.06);
}

TEST(Ranking, InvariantUnderIncreasingTransforms) {
  auto tasks = random_tasks(200, 100, 3);
  const RankingMetrics base = ranking_metrics(tasks);
  for (auto f : {+[](double x) { return std::exp(3.0 * x) + 1.0; }, +[](double x) { return std::pow(x, 5.0) - 7.0; },
                 +[](double x) { return std::atan(x); }}) {
    auto moved = tasks;
    for (auto& t : moved)
      for (double& s : t.scores) s = f(s);
    const RankingMetrics m = ranking_metrics(moved);
    EXPECT_EQ(m.ranks, base.ranks);
    EXPECT_EQ(m.avg_rank, base.avg_rank);
  }
}

TEST(Tasks, Construction) {
  std::vector<std::string> pool;
  for (int i = 0; i < 150; ++i) pool.push_back("l" + std::to_string(i));
  std::vector<LoopPair> positives;
  for (int i = 0; i < 20; ++i) positives.push_back(pair(pool[2 * i], pool[2 * i + 1], true));
  const auto tasks = build_ranking_tasks(positives, pool, 5);
  ASSERT_EQ(tasks.size(), 20u);
  std::set<std::size_t> target_positions;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_NO_THROW(validate(tasks[i]));
    EXPECT_EQ(tasks[i].query_id, positives[i].loop_a);
    EXPECT_EQ(tasks[i].target_id, positives[i].loop_b);
    EXPECT_EQ(tasks[i].candidates[tasks[i].target_index()], positives[i].loop_b);
    target_positions.insert(tasks[i].target_index());
  }
  EXPECT_GT(target_positions.size(), 10u);
  const auto again = build_ranking_tasks(positives, pool, 5);
  for (std::size_t i = 0; i < tasks.size(); ++i) EXPECT_EQ(again[i].candidates, tasks[i].candidates);
  const auto other = build_ranking_tasks(positives, pool, 6);
  EXPECT_NE(other[0].candidates, tasks[0].candidates);

  const auto small = build_ranking_tasks(positives, pool, 5, 10);
  EXPECT_NO_THROW(validate(small[0], 10));
  try {
    build_ranking_tasks(positives, std::vector<std::string>(pool.begin(), pool.begin() + 50), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Tasks, ValidateRejectsMalformed) {
  RankingTask t{"q", "t", {"a", "t", "b"}};
  EXPECT_NO_THROW(validate(t, 3));
  EXPECT_THROW(validate(t, 4), Error);
  t.candidates = {"a", "t", "t"};
  EXPECT_THROW(validate(t, 3), Error);
  t.candidates = {"a", "t", "q"};
  EXPECT_THROW(validate(t, 3), Error);
  t.candidates = {"a", "b", "c"};
  EXPECT_THROW(validate(t, 3), Error);
}

TEST(Tasks, ClassificationSetMustBalance) {
  const std::vector<LoopPair> pos{pair("a", "b", true), pair("c", "d", true)};
  const std::vector<LoopPair> neg{pair("a", "d", false), pair("c", "b", false)};
  const auto set = build_classification_set(pos, neg);
  ASSERT_EQ(set.size(), 4u);
  EXPECT_EQ(set[0], pos[0]);
  EXPECT_EQ(set[3], neg[1]);
  EXPECT_THROW(build_classification_set(pos, {neg[0]}), Error);
}

TEST(Scorer, ClassificationAndRankingThroughInterface) {
  TableScorer scorer;
  scorer.table = {{"a|b", 0.9}, {"c|d", 0.7}, {"a|d", 0.2}, {"c|b", 0.8}};
  const std::vector<LoopPair> set{pair("a", "b", true), pair("c", "d", true), pair("a", "d", false),
                                  pair("c", "b", false)};
  EXPECT_EQ(score_pairs(scorer, set), (std::vector<double>{0.9, 0.7, 0.2, 0.8}));
  const auto m = classification_eval(scorer, set, 0.5);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);

  RankingTask task{"a", "b", {"x", "b", "y"}};
  scorer.table["a|x"] = 0.95;
  const auto r = ranking_eval(scorer, {task}, 3);
  EXPECT_EQ(r.ranks, (std::vector<std::size_t>{2}));
}

TEST(Report, PublishedReferenceRows) {
  struct Row {
    const char* model;
    const char* strategy;
    double acc, f1, rank, t10, t30, t50;
  };
  // Published full-corpus results.
  const Row expected[] = {
      {"cnn", "random", 0.60, 0.59, 43.0, 0.13, 0.35, 0.59},    {"cnn", "selected", 0.59, 0.59, 43.1, 0.13, 0.29, 0.62},
      {"cnn", "reverse", 0.63, 0.62, 41.2, 0.19, 0.42, 0.62},   {"cnn", "shift", 0.57, 0.56, 49.0, 0.11, 0.34, 0.54},
      {"cnn", "rearrange", 0.57, 0.57, 47.7, 0.10, 0.31, 0.57}, {"snn", "random", 0.51, 0.47, 34.2, 0.27, 0.52, 0.74},
      {"snn", "selected", 0.52, 0.47, 42.8, 0.18, 0.39, 0.59},  {"snn", "reverse", 0.53, 0.48, 42.7, 0.16, 0.37, 0.62},
      {"snn", "shift", 0.53, 0.52, 43.0, 0.16, 0.41, 0.65},     {"snn", "rearrange", 0.53, 0.53, 44.2, 0.16, 0.40, 0.60},
  };
  ASSERT_EQ(reference_results().size(), 10u);
  for (const auto& e : expected) {
    const auto row = reference_for(e.model, e.strategy);
    ASSERT_TRUE(row.has_value()) << e.model << " " << e.strategy;
    EXPECT_EQ(row->accuracy, e.acc);
    EXPECT_EQ(row->f1, e.f1);
    EXPECT_EQ(row->avg_rank, e.rank);
    EXPECT_EQ(row->top10, e.t10);
    EXPECT_EQ(row->top30, e.t30);
    EXPECT_EQ(row->top50, e.t50);
  }
  EXPECT_FALSE(reference_for("amu", "").has_value());
}

TEST(Report, JsonAndTable) {
  EvalReport r;
  r.scorer = "snn";
  r.negative_strategy = "random";
  r.seed = 3;
  r.candidates = 100;
  r.threshold = 0.25;
  r.threshold_rule = "max-f1";
  r.classification = ClassificationMetrics{0.5, 0.4, 1, 2, 3, 4};
  r.ranking = ranking_metrics(random_tasks(5, 100, 1));
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j.at("scorer"), "snn");
  EXPECT_EQ(j.at("classification").at("tp"), 1);
  EXPECT_EQ(j.at("ranking").at("ranks").size(), 5u);
  EXPECT_DOUBLE_EQ(j.at("reference_full_corpus").at("avg_rank").get<double>(), 34.2);
  const std::string table = format_table({r});
  EXPECT_NE(table.find("snn"), std::string::npos);
  EXPECT_NE(table.find("34.2"), std::string::npos);
}
