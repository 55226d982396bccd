#pragma once

#include <memory>
#include <string>
#include <vector>

#include "loopcompat/eval/report.hpp"
#include "loopcompat/eval/scorer.hpp"
#include "loopcompat/nn/train.hpp"
#include "loopcompat/store/config.hpp"
#include "loopcompat/store/manifest.hpp"

namespace loopcompat::store {

/// Labelled pairs of one split: positives then the negatives of `strategy`.
std::vector<dedup::LoopPair> labelled_pairs(const Corpus& corpus, const std::string& split,
                                            const std::string& strategy);

/// Model inputs for the pairs (per-loop log-mels, or per-pair mixes for the
/// summing CNN).
nn::PairDataset build_dataset(const Corpus& corpus, const std::vector<dedup::LoopPair>& pairs, nn::ModelKind kind,
                              nn::Mixing mixing);

/// Trains on the train split and validates on the val split; writes
/// checkpoints/<model>_<strategy>.ckpt and .csv.
nn::ModelCheckpoint train_model(const Corpus& corpus, const Settings& settings);

std::filesystem::path checkpoint_path(const Corpus& corpus, nn::ModelKind kind, const std::string& strategy);

/// Scorer adapters over a corpus: cnn (probability), snn (negated embedding
/// distance) and amu (mashability score, 0 for silent loops).
std::unique_ptr<eval::PairScorer> make_scorer(const Corpus& corpus, const std::string& scorer,
                                              const std::string& strategy);

/// Held-out ranking tasks (test pairs against test loops, or against every
/// original loop when corpus_wide_candidates is set).
std::vector<eval::RankingTask> ranking_tasks(const Corpus& corpus, const Settings& settings);

/// task: "classify", "rank" or "both". Writes reports/<scorer>_<strategy>.json.
eval::EvalReport evaluate(const Corpus& corpus, const Settings& settings, const std::string& scorer,
                          const std::string& task);

}  // namespace loopcompat::store
