#include "loopcompat/store/experiment.hpp"

#include <algorithm>
#include <map>

#include "loopcompat/audio/wav.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/mash/mashability.hpp"
#include "loopcompat/nn/loss.hpp"
#include "loopcompat/nn/scoring.hpp"
#include "loopcompat/store/matrix_io.hpp"

namespace loopcompat::store {

namespace {

std::string eval_split(const Corpus& corpus, const char* which) { return corpus.has_splits() ? which : ""; }

/// Loop audio and log-mel features by id, loaded on first use.
class LoopCache {
 public:
  explicit LoopCache(const Corpus& corpus) : corpus_(corpus) {}

  const audio::AudioClip& audio(const std::string& id) {
    auto it = audio_.find(id);
    if (it == audio_.end()) it = audio_.emplace(id, audio::read_wav(corpus_.loop_audio(id))).first;
    return it->second;
  }

  const Matrix& mel(const std::string& id) {
    auto it = mel_.find(id);
    if (it == mel_.end()) {
      const fs::path cached = corpus_.paths.spectrograms() / (id + ".bin");
      Matrix m = fs::exists(cached) ? load_matrix(cached) : audio::loop_features(audio(id)).values;
      it = mel_.emplace(id, std::move(m)).first;
    }
    return it->second;
  }

 private:
  const Corpus& corpus_;
  std::map<std::string, audio::AudioClip> audio_;
  std::map<std::string, Matrix> mel_;
};

class CnnScorer final : public eval::PairScorer {
 public:
  CnnScorer(const Corpus& corpus, nn::ModelCheckpoint ckpt) : cache_(corpus), predictor_(ckpt) {}
  std::string name() const override { return "cnn"; }

  double score(const std::string& source, const std::string& target) override {
    return score_many(source, {target}).front();
  }

  std::vector<double> score_many(const std::string& source, const std::vector<std::string>& targets) override {
    const nn::Mixing mixing = predictor_.checkpoint().train.mixing;
    std::vector<std::vector<Matrix>> features;
    features.reserve(targets.size());
    for (const auto& t : targets) features.push_back(nn::pair_features(cache_.audio(source), cache_.audio(t), mixing));
    std::vector<const Matrix*> first, second;
    for (const auto& f : features) {
      first.push_back(&f[0]);
      if (f.size() > 1) second.push_back(&f[1]);
    }
    return predictor_.probabilities(first, second);
  }

 private:
  LoopCache cache_;
  nn::Predictor predictor_;
};

class SnnScorer final : public eval::PairScorer {
 public:
  SnnScorer(const Corpus& corpus, nn::ModelCheckpoint ckpt) : cache_(corpus), predictor_(ckpt) {}
  std::string name() const override { return "snn"; }

  double score(const std::string& source, const std::string& target) override {
    return -nn::snn_distance(embedding(source), embedding(target));
  }

  std::vector<double> score_many(const std::string& source, const std::vector<std::string>& targets) override {
    std::vector<const Matrix*> missing;
    std::vector<std::string> ids;
    for (const auto& id : targets) {
      if (!embeddings_.contains(id) && std::find(ids.begin(), ids.end(), id) == ids.end()) {
        ids.push_back(id);
        missing.push_back(&cache_.mel(id));
      }
    }
    const auto computed = predictor_.embeddings(missing);
    for (std::size_t i = 0; i < ids.size(); ++i) embeddings_.emplace(ids[i], computed[i]);
    return PairScorer::score_many(source, targets);
  }

 private:
  const std::vector<double>& embedding(const std::string& id) {
    auto it = embeddings_.find(id);
    if (it == embeddings_.end()) it = embeddings_.emplace(id, predictor_.embeddings({&cache_.mel(id)}).front()).first;
    return it->second;
  }

  LoopCache cache_;
  nn::Predictor predictor_;
  std::map<std::string, std::vector<double>> embeddings_;
};

class AmuScorer final : public eval::PairScorer {
 public:
  explicit AmuScorer(const Corpus& corpus) : cache_(corpus) {}
  std::string name() const override { return "amu"; }

  double score(const std::string& source, const std::string& target) override {
    const auto& a = features(source);
    const auto& b = features(target);
    if (a.silent || b.silent) return 0.0;
    return mash::mashability(a, b).score;
  }

 private:
  const mash::BeatSyncFeatures& features(const std::string& id) {
    auto it = features_.find(id);
    if (it == features_.end()) it = features_.emplace(id, mash::beat_sync_features(cache_.audio(id))).first;
    return it->second;
  }

  LoopCache cache_;
  std::map<std::string, mash::BeatSyncFeatures> features_;
};

}  // namespace

std::vector<dedup::LoopPair> labelled_pairs(const Corpus& corpus, const std::string& split,
                                            const std::string& strategy) {
  std::vector<dedup::LoopPair> out;
  for (const auto& p : corpus.pairs) {
    if (corpus.split_of(p) == split) out.push_back(p);
  }
  const auto it = corpus.negatives.find(strategy);
  if (it == corpus.negatives.end()) {
    fail(ErrorKind::InsufficientData, "no negatives for strategy '" + strategy + "'; run the negatives stage first");
  }
  for (const auto& p : it->second) {
    if (corpus.split_of(p) == split) out.push_back(p);
  }
  return out;
}

nn::PairDataset build_dataset(const Corpus& corpus, const std::vector<dedup::LoopPair>& pairs, nn::ModelKind kind,
                              nn::Mixing mixing) {
  LoopCache cache(corpus);
  nn::PairDataset data;
  const bool per_pair = kind == nn::ModelKind::Cnn && mixing == nn::Mixing::Sum;
  std::map<std::string, std::size_t> index;
  auto loop_index = [&](const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, data.features.size()).first;
      data.features.push_back(cache.mel(id));
    }
    return it->second;
  };
  for (const auto& p : pairs) {
    nn::PairSample s;
    s.label = p.label == dedup::PairLabel::Positive ? 1.0 : 0.0;
    if (per_pair) {
      s.a = s.b = data.features.size();
      data.features.push_back(nn::pair_features(cache.audio(p.loop_a), cache.audio(p.loop_b), mixing).front());
    } else {
      s.a = loop_index(p.loop_a);
      s.b = loop_index(p.loop_b);
    }
    data.pairs.push_back(s);
  }
  return data;
}

std::filesystem::path checkpoint_path(const Corpus& corpus, nn::ModelKind kind, const std::string& strategy) {
  return corpus.paths.checkpoints() / (std::string(nn::to_string(kind)) + "_" + strategy + ".ckpt");
}

nn::ModelCheckpoint train_model(const Corpus& corpus, const Settings& settings) {
  require(corpus.has_splits(), ErrorKind::InsufficientData, "training needs train/val splits; run split first");
  const auto& cfg = settings.train;
  const auto train_pairs = labelled_pairs(corpus, "train", cfg.negative_strategy);
  const auto val_pairs = labelled_pairs(corpus, "val", cfg.negative_strategy);
  const auto train_set = build_dataset(corpus, train_pairs, cfg.kind, cfg.mixing);
  const auto val_set = build_dataset(corpus, val_pairs, cfg.kind, cfg.mixing);
  nn::ModelCheckpoint ckpt = nn::train(train_set, val_set, cfg);
  const auto path = checkpoint_path(corpus, cfg.kind, cfg.negative_strategy);
  nn::save_checkpoint(path, ckpt);
  auto log = path;
  log.replace_extension(".csv");
  nn::write_training_log(log, ckpt.history);
  return ckpt;
}

std::unique_ptr<eval::PairScorer> make_scorer(const Corpus& corpus, const std::string& scorer,
                                              const std::string& strategy) {
  if (scorer == "amu") return std::make_unique<AmuScorer>(corpus);
  const nn::ModelKind kind = nn::parse_model_kind(scorer);
  const auto path = checkpoint_path(corpus, kind, strategy);
  require(fs::exists(path), ErrorKind::InvalidInput, "no checkpoint at " + path.string() + "; train first");
  auto ckpt = nn::load_checkpoint(path);
  if (kind == nn::ModelKind::Cnn) return std::make_unique<CnnScorer>(corpus, std::move(ckpt));
  return std::make_unique<SnnScorer>(corpus, std::move(ckpt));
}

std::vector<eval::RankingTask> ranking_tasks(const Corpus& corpus, const Settings& settings) {
  std::map<std::string, const dedup::LoopPair*> by_id;
  for (const auto& p : corpus.pairs) by_id[p.pair_id] = &p;
  std::vector<dedup::LoopPair> held_out;
  std::vector<std::string> pool;
  for (const auto& s : corpus.songs) {
    if (s.split != "test" || s.test_pair.empty()) continue;
    const auto it = by_id.find(s.test_pair);
    require(it != by_id.end(), ErrorKind::InvalidInput, "test song " + s.song_id + " names unknown pair");
    held_out.push_back(*it->second);
    pool.push_back(it->second->loop_a);
    pool.push_back(it->second->loop_b);
  }
  require(!held_out.empty(), ErrorKind::InsufficientData, "no held-out test pairs; split with test_songs > 0");
  if (settings.corpus_wide_candidates) {
    pool.clear();
    for (const auto& l : corpus.loops) {
      if (!l.derived_from) pool.push_back(l.loop_id);
    }
  }
  return eval::build_ranking_tasks(held_out, pool, settings.seed, settings.candidates);
}

eval::EvalReport evaluate(const Corpus& corpus, const Settings& settings, const std::string& scorer_name,
                          const std::string& task) {
  require(task == "classify" || task == "rank" || task == "both", ErrorKind::InvalidInput,
          "task must be classify, rank or both");
  const std::string strategy = settings.train.negative_strategy;
  auto scorer = make_scorer(corpus, scorer_name, strategy);

  eval::EvalReport report;
  report.scorer = scorer_name;
  report.negative_strategy = scorer_name == "amu" ? "" : strategy;
  report.seed = settings.seed;
  report.candidates = settings.candidates;

  if (task == "classify" || task == "both") {
    const std::string split = eval_split(corpus, "val");
    std::vector<dedup::LoopPair> positives, negatives;
    for (const auto& p : labelled_pairs(corpus, split, "equal")) {
      (p.label == dedup::PairLabel::Positive ? positives : negatives).push_back(p);
    }
    const auto set = eval::build_classification_set(positives, negatives);
    std::vector<int> labels;
    for (const auto& p : set) labels.push_back(p.label == dedup::PairLabel::Positive ? 1 : 0);
    const auto scores = eval::score_pairs(*scorer, set);
    if (scorer_name == "cnn") {
      report.threshold = 0.5;
      report.threshold_rule = "fixed probability 0.5";
    } else {
      report.threshold = eval::select_threshold(scores, labels);
      report.threshold_rule = "max F1 over validation score percentiles";
    }
    report.classification = eval::classification_metrics(scores, labels, report.threshold);
  }
  if (task == "rank" || task == "both") {
    report.ranking = eval::ranking_eval(*scorer, ranking_tasks(corpus, settings), settings.candidates);
  }

  const std::string stem = scorer_name + (report.negative_strategy.empty() ? "" : "_" + strategy) + "_" + task;
  write_atomic(corpus.paths.reports() / (stem + ".json"), eval::to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace loopcompat::store
