#include "loopcompat/dedup/refine.hpp"

#include <algorithm>
#include <numeric>

#include "loopcompat/error.hpp"

namespace loopcompat::dedup {
namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

DedupResult dedup_loops(const std::vector<LoopCandidate>& loops) {
  const std::size_t n = loops.size();
  UnionFind groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (hamming_distance(loops[i].hash, loops[j].hash) < kDuplicateDistance) groups.unite(i, j);
    }
  }

  std::map<std::size_t, std::size_t> winner;  // root -> survivor
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = groups.find(i);
    auto [it, inserted] = winner.emplace(root, i);
    if (!inserted && loops[i].activation_total > loops[it->second].activation_total) it->second = i;
  }

  DedupResult result;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t w = winner.at(groups.find(i));
    if (w == i) result.kept.push_back(i);
    else result.merged_into.emplace(i, w);
  }
  return result;
}

extract::LoopLayout refine_layout(const extract::LoopLayout& layout, const DedupResult& result) {
  std::map<std::size_t, std::size_t> row_of;
  for (std::size_t r = 0; r < result.kept.size(); ++r) {
    require(result.kept[r] < layout.rows, ErrorKind::InvalidInput, "merge map refers to a missing layout row");
    row_of.emplace(result.kept[r], r);
  }

  extract::LoopLayout out(result.kept.size(), layout.cols);
  for (std::size_t r = 0; r < result.kept.size(); ++r) {
    for (std::size_t b = 0; b < layout.cols; ++b) out(r, b) = layout(result.kept[r], b);
  }
  for (auto [loser, survivor] : result.merged_into) {
    require(loser < layout.rows && row_of.contains(survivor), ErrorKind::InvalidInput,
            "merge map inconsistent with layout");
    const std::size_t r = row_of.at(survivor);
    for (std::size_t b = 0; b < layout.cols; ++b) out(r, b) += layout(loser, b);
  }

  for (std::size_t b = 0; b < out.cols; ++b) {
    double peak = 0.0;
    for (std::size_t r = 0; r < out.rows; ++r) peak = std::max(peak, out(r, b));
    if (peak <= 0.0) continue;
    for (std::size_t r = 0; r < out.rows; ++r) out(r, b) /= peak;
  }
  return out;
}

std::vector<CoActivity> co_active_pairs(const extract::LoopLayout& layout, double threshold) {
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  std::vector<std::size_t> active;
  for (std::size_t b = 0; b < layout.cols; ++b) {
    active.clear();
    for (std::size_t r = 0; r < layout.rows; ++r) {
      if (layout(r, b) >= threshold) active.push_back(r);
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) ++counts[{active[i], active[j]}];
    }
  }
  std::vector<CoActivity> out;
  out.reserve(counts.size());
  for (auto [key, bars] : counts) out.push_back({key.first, key.second, bars});
  return out;
}

std::vector<LoopPair> derive_pairs(const extract::LoopLayout& layout, const std::vector<std::string>& loop_ids,
                                   const std::string& song_id, double threshold) {
  require(loop_ids.size() == layout.rows, ErrorKind::InvalidInput, "one loop id per layout row required");
  std::vector<LoopPair> pairs;
  for (const auto& c : co_active_pairs(layout, threshold)) {
    LoopPair p;
    p.loop_a = loop_ids[c.a];
    p.loop_b = loop_ids[c.b];
    if (p.loop_b < p.loop_a) std::swap(p.loop_a, p.loop_b);
    p.pair_id = p.loop_a + "+" + p.loop_b;
    p.label = PairLabel::Positive;
    p.strategy = Strategy::Original;
    p.song_id = song_id;
    p.bar_count = c.bars;
    pairs.push_back(std::move(p));
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const LoopPair& x, const LoopPair& y) { return std::tie(x.loop_a, x.loop_b) < std::tie(y.loop_a, y.loop_b); });
  return pairs;
}

}  // namespace loopcompat::dedup
