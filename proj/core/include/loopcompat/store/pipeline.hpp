#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loopcompat/negatives/drum_bass.hpp"
#include "loopcompat/store/config.hpp"
#include "loopcompat/store/manifest.hpp"

namespace loopcompat::store {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct StageResult {
  bool skipped = false;  // inputs unchanged since the last run
  std::size_t processed = 0;
  std::vector<std::string> failures;  // "<song>: <reason>"
};

/// NTF loop extraction per song: writes layouts/<song>.json and the audio of
/// every loop's best instance.
StageResult extract_stage(Corpus& corpus, const Settings& settings);

/// Hash-based duplicate removal and layout refinement; rewrites loops.jsonl.
StageResult dedup_stage(Corpus& corpus, const Settings& settings);

/// Positive pairs from the refined layouts; rewrites pairs.jsonl.
StageResult pairs_stage(Corpus& corpus, const Settings& settings);

/// Song-level train/val/test split recorded on the song records.
StageResult split_stage(Corpus& corpus, const Settings& settings);

/// Negatives for one strategy name (random, selected, reverse, shift,
/// rearrange or equal), per split when splits exist. Manipulated loops are
/// added to loops.jsonl.
StageResult negatives_stage(Corpus& corpus, const Settings& settings, const std::string& strategy,
                            const negatives::DrumBassDetector* detector = nullptr);

/// Log-mel features (spectrograms/<loop>.bin) and beat-synchronous features
/// (features/<loop>.json) for every loop.
StageResult featurize_stage(Corpus& corpus, const Settings& settings);

/// extract, dedup, pairs, split, negatives for every strategy and equal,
/// featurize.
std::vector<std::pair<std::string, StageResult>> run_pipeline(Corpus& corpus, const Settings& settings);

/// Strategy names accepted by negatives_stage, in generation order.
const std::vector<std::string>& negative_set_names();

}  // namespace loopcompat::store
