#include "loopcompat/negatives/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "loopcompat/error.hpp"
#include "loopcompat/negatives/manipulate.hpp"

namespace loopcompat::negatives {
namespace {

constexpr std::size_t kMaxRedraws = 1000;

std::size_t distinct_songs(const std::vector<LoopRef>& loops) {
  std::set<std::string> songs;
  for (const auto& l : loops) songs.insert(l.song_id);
  return songs.size();
}

LoopPair draw_cross_song(const std::vector<LoopRef>& loops, Rng& rng, Strategy strategy) {
  const LoopRef& a = loops[rng.index(loops.size())];
  std::vector<std::size_t> others;
  others.reserve(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    if (loops[i].song_id != a.song_id) others.push_back(i);
  }
  const LoopRef& b = loops[others[rng.index(others.size())]];

  LoopPair p;
  p.loop_a = a.loop_id;
  p.loop_b = b.loop_id;
  p.label = dedup::PairLabel::Negative;
  p.strategy = strategy;
  p.song_id = a.song_id + "|" + b.song_id;
  p.pair_id = std::string(dedup::to_string(strategy)) + ":" + p.loop_a + "+" + p.loop_b;
  return p;
}

// Upper bound on distinct unordered cross-song pairs.
std::size_t cross_song_capacity(const std::vector<LoopRef>& loops) {
  std::map<std::string, std::size_t> per_song;
  for (const auto& l : loops) ++per_song[l.song_id];
  const std::size_t n = loops.size();
  std::size_t same = 0;
  for (auto [song, count] : per_song) same += count * (count - 1) / 2;
  return n * (n - 1) / 2 - same;
}

std::size_t manipulation_variants(Strategy s) {
  switch (s) {
    case Strategy::Reverse: return 1;
    case Strategy::Shift: return 3;
    case Strategy::Rearrange: return non_identity_orders().size();
    default: return 0;
  }
}

std::string unordered_key(const std::string& a, const std::string& b) { return a < b ? a + "\n" + b : b + "\n" + a; }

}  // namespace

const std::vector<Strategy>& negative_strategies() {
  static const std::vector<Strategy> all{Strategy::Random, Strategy::Selected, Strategy::Reverse, Strategy::Shift,
                                         Strategy::Rearrange};
  return all;
}

LoopPair sample_random(const std::vector<LoopRef>& loops, Rng& rng) {
  require(distinct_songs(loops) >= 2, ErrorKind::InsufficientData, "random sampling needs loops from two songs");
  return draw_cross_song(loops, rng, Strategy::Random);
}

LoopPair sample_selected(const std::vector<LoopRef>& loops, const std::function<bool(const LoopRef&)>& eligible,
                         Rng& rng) {
  std::vector<LoopRef> kept;
  for (const auto& l : loops) {
    if (eligible(l)) kept.push_back(l);
  }
  require(distinct_songs(kept) >= 2, ErrorKind::InsufficientData,
          "selected sampling needs non drum/bass loops from two songs");
  return draw_cross_song(kept, rng, Strategy::Selected);
}

std::vector<std::size_t> stratify(std::size_t total, std::size_t strata) {
  std::vector<std::size_t> counts(strata, strata == 0 ? 0 : total / strata);
  for (std::size_t i = 0; i < (strata == 0 ? 0 : total % strata); ++i) ++counts[i];
  return counts;
}

NegativeSet build_negative_set(const std::vector<LoopPair>& positives, const NegativeSources& sources,
                               const SamplingConfig& config) {
  require(config.neg_pos_ratio > 0.0, ErrorKind::InvalidInput, "negative/positive ratio must be positive");
  require(config.beats_per_loop == kBeatsPerLoop, ErrorKind::InvalidInput, "loops are one 4-beat bar");
  require(!positives.empty(), ErrorKind::InsufficientData, "no positive pairs to balance against");
  if (!config.equal) {
    require(config.strategy != Strategy::Original, ErrorKind::InvalidInput, "'original' is not a negative strategy");
  }

  const auto total = static_cast<std::size_t>(std::llround(config.neg_pos_ratio * static_cast<double>(positives.size())));
  std::vector<std::pair<Strategy, std::size_t>> plan;
  if (config.equal) {
    const auto counts = stratify(total, negative_strategies().size());
    for (std::size_t i = 0; i < counts.size(); ++i) plan.emplace_back(negative_strategies()[i], counts[i]);
  } else {
    plan.emplace_back(config.strategy, total);
  }

  HeuristicDetector heuristic;
  const DrumBassDetector& detector = sources.detector ? *sources.detector : heuristic;
  std::map<std::string, bool> drum_bass_cache;
  auto eligible = [&](const LoopRef& ref) {
    auto it = drum_bass_cache.find(ref.loop_id);
    if (it == drum_bass_cache.end()) {
      bool flagged = true;
      try {
        flagged = detector.is_pure_drum_or_bass(ref.loop_id, sources.load(ref.loop_id));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Undeterminable) throw;
      }
      it = drum_bass_cache.emplace(ref.loop_id, flagged).first;
    }
    return !it->second;
  };

  std::set<std::string> positive_keys;
  for (const auto& p : positives) positive_keys.insert(unordered_key(p.loop_a, p.loop_b));

  NegativeSet out;
  std::set<std::string> used_pairs;
  std::map<std::string, std::size_t> manipulated_index;

  for (std::size_t s = 0; s < plan.size(); ++s) {
    const auto [strategy, count] = plan[s];
    if (count == 0) continue;
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(strategy)));

    if (dedup::is_within_song(strategy)) {
      require(count <= positives.size() * manipulation_variants(strategy), ErrorKind::InsufficientData,
              "too many " + std::string(dedup::to_string(strategy)) + " negatives requested for the positives available");
      std::vector<std::size_t> order(positives.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);

      std::size_t made = 0;
      for (std::size_t attempt = 0; made < count; ++attempt) {
        require(attempt < count * kMaxRedraws, ErrorKind::InsufficientData, "could not draw distinct manipulations");
        const LoopPair& pos = positives[order[attempt % order.size()]];
        audio::AudioClip clip;
        std::string tag;
        std::string id;
        if (strategy == Strategy::Reverse) {
          id = pos.loop_b + "__reverse";
        } else if (strategy == Strategy::Shift) {
          // Draw the shift before loading audio so the id can be checked first.
          const int beats = 1 + static_cast<int>(rng.index(3));
          id = pos.loop_b + "__shift" + std::to_string(beats);
          tag = std::to_string(beats);
        } else {
          const auto& orders = non_identity_orders();
          const BeatOrder order_drawn = orders[rng.index(orders.size())];
          tag = order_tag(order_drawn);
          id = pos.loop_b + "__rearrange" + tag;
        }

        const std::string key = pos.loop_a + "\n" + id;
        if (used_pairs.contains(key)) continue;
        used_pairs.insert(key);

        if (!manipulated_index.contains(id)) {
          const auto target = sources.load(pos.loop_b);
          if (strategy == Strategy::Reverse) {
            clip = reverse_loop(target);
          } else if (strategy == Strategy::Shift) {
            clip = shift_loop(target, std::stoi(tag));
          } else {
            BeatOrder order_drawn{};
            for (std::size_t i = 0; i < order_drawn.size(); ++i) order_drawn[i] = tag[i] - '0';
            clip = rearrange_loop(target, order_drawn);
          }
          manipulated_index.emplace(id, out.manipulated.size());
          out.manipulated.push_back({id, pos.loop_b, pos.song_id, strategy, std::move(clip)});
        }

        LoopPair neg;
        neg.loop_a = pos.loop_a;
        neg.loop_b = id;
        neg.label = dedup::PairLabel::Negative;
        neg.strategy = strategy;
        neg.song_id = pos.song_id;
        neg.pair_id = std::string(dedup::to_string(strategy)) + ":" + neg.loop_a + "+" + neg.loop_b;
        out.pairs.push_back(std::move(neg));
        ++made;
      }
      continue;
    }

    std::vector<LoopRef> pool = sources.loops;
    if (strategy == Strategy::Selected) {
      std::vector<LoopRef> kept;
      for (const auto& l : pool) {
        if (eligible(l)) kept.push_back(l);
      }
      pool = std::move(kept);
    }
    require(distinct_songs(pool) >= 2, ErrorKind::InsufficientData,
            std::string(dedup::to_string(strategy)) + " sampling needs eligible loops from two songs");
    require(count <= cross_song_capacity(pool), ErrorKind::InsufficientData,
            "not enough distinct cross-song pairs for the requested ratio");

    std::size_t made = 0;
    for (std::size_t attempt = 0; made < count; ++attempt) {
      require(attempt < count * kMaxRedraws, ErrorKind::InsufficientData, "could not draw distinct cross-song pairs");
      LoopPair neg = draw_cross_song(pool, rng, strategy);
      const std::string key = unordered_key(neg.loop_a, neg.loop_b);
      if (used_pairs.contains(key) || positive_keys.contains(key)) continue;
      used_pairs.insert(key);
      out.pairs.push_back(std::move(neg));
      ++made;
    }
  }
  return out;
}

}  // namespace loopcompat::negatives
