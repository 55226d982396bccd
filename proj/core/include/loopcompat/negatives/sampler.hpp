#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/dedup/loop_pair.hpp"
#include "loopcompat/negatives/drum_bass.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::negatives {

using dedup::LoopPair;
using dedup::Strategy;

struct LoopRef {
  std::string loop_id;
  std::string song_id;
};

struct SamplingConfig {
  /// Single strategy, or every negative strategy in equal shares.
  bool equal = false;
  Strategy strategy = Strategy::Random;
  std::uint64_t seed = 0;
  double neg_pos_ratio = 1.0;
  int beats_per_loop = 4;
};

/// The five negative strategies in stratification order.
const std::vector<Strategy>& negative_strategies();

/// Two loops from different songs, each chosen uniformly. Throws
/// InsufficientData when fewer than two songs are present.
LoopPair sample_random(const std::vector<LoopRef>& loops, Rng& rng);

/// Like sample_random but restricted to loops for which `eligible` holds.
LoopPair sample_selected(const std::vector<LoopRef>& loops, const std::function<bool(const LoopRef&)>& eligible,
                         Rng& rng);

struct ManipulatedLoop {
  std::string loop_id;       // <target>__<strategy tag>
  std::string derived_from;  // target loop id
  std::string song_id;
  Strategy strategy = Strategy::Reverse;
  audio::AudioClip audio;
};

struct NegativeSet {
  std::vector<LoopPair> pairs;
  std::vector<ManipulatedLoop> manipulated;  // unique by loop_id
};

/// Per-strategy counts for `total` negatives: equal shares, remainder going
/// to the earlier strategies.
std::vector<std::size_t> stratify(std::size_t total, std::size_t strata);

struct NegativeSources {
  /// Canonical loops eligible for between-song sampling.
  std::vector<LoopRef> loops;
  /// Loads a loop's audio (within-song strategies and the drum/bass filter).
  std::function<audio::AudioClip(const std::string& loop_id)> load;
  /// Defaults to the heuristic detector.
  const DrumBassDetector* detector = nullptr;
};

/// Builds round(ratio * |positives|) negatives. Within-song strategies pair
/// a positive's source loop (loop_a) with its manipulated target (loop_b);
/// between-song strategies draw fresh cross-song pairs. Throws
/// InsufficientData when the requested count cannot be met without repeats.
NegativeSet build_negative_set(const std::vector<LoopPair>& positives, const NegativeSources& sources,
                               const SamplingConfig& config);

}  // namespace loopcompat::negatives
