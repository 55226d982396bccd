#include "loopcompat/store/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/audio/wav.hpp"
#include "loopcompat/dedup/average_hash.hpp"
#include "loopcompat/dedup/refine.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/extract/bar_grid.hpp"
#include "loopcompat/extract/loop_audio.hpp"
#include "loopcompat/extract/ntf.hpp"
#include "loopcompat/mash/features.hpp"
#include "loopcompat/negatives/sampler.hpp"
#include "loopcompat/random.hpp"
#include "loopcompat/store/matrix_io.hpp"
#include "loopcompat/store/split.hpp"

namespace loopcompat::store {

using nlohmann::json;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

const std::vector<std::string>& negative_set_names() {
  static const std::vector<std::string> names = {"random", "selected", "reverse", "shift", "rearrange", "equal"};
  return names;
}

namespace {

constexpr std::string_view kSchema = "loopcompat-pipeline-1";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Content stamps of completed stages, kept in stages.json.
class Stamps {
 public:
  explicit Stamps(const CorpusPaths& paths) : path_(paths.stages()) {
    if (fs::exists(path_)) data_ = json::parse(read_text(path_));
    if (!data_.is_object()) data_ = json::object();
  }
  std::string get(const std::string& stage) const { return data_.value(stage, ""); }
  void set(const std::string& stage, const std::string& stamp) {
    data_[stage] = stamp;
    write_atomic(path_, data_.dump(2) + "\n");
  }
  void erase(const std::string& stage) {
    if (data_.erase(stage)) write_atomic(path_, data_.dump(2) + "\n");
  }

 private:
  fs::path path_;
  json data_;
};

std::uint64_t hash_file(const fs::path& path, std::uint64_t h) {
  if (!fs::exists(path)) return fnv1a("<missing>", h);
  return fnv1a(read_text(path), h);
}

std::string stamp_of(std::initializer_list<std::string_view> parts) {
  std::uint64_t h = fnv1a(kSchema);
  for (auto p : parts) {
    h = fnv1a(p, h);
    h = fnv1a("\x1f", h);
  }
  return hex64(h);
}

std::string num(double v) { return json(v).dump(); }
std::string num(std::size_t v) { return std::to_string(v); }

fs::path layout_path(const Corpus& c, const std::string& song) { return c.paths.layouts() / (song + ".json"); }

std::string loop_id_for(const std::string& song, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_loop%02zu", index);
  return song + buf;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows[0].size() : 0;
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const auto row = rows[i].get<std::vector<double>>();
    require(row.size() == c, ErrorKind::InvalidInput, "ragged layout matrix");
    std::copy(row.begin(), row.end(), m.row(i).begin());
  }
  return m;
}

std::string loop_audio_rel(const std::string& loop_id) {
  return (fs::path("audio") / "loops" / (loop_id + ".wav")).generic_string();
}

/// Drops manipulated loops that no negatives file refers to.
void collect_garbage(Corpus& corpus) {
  std::set<std::string> referenced;
  for (const auto& [name, pairs] : corpus.negatives) {
    for (const auto& p : pairs) {
      referenced.insert(p.loop_a);
      referenced.insert(p.loop_b);
    }
  }
  std::erase_if(corpus.loops, [&](const LoopRecord& l) {
    return l.derived_from.has_value() && !referenced.contains(l.loop_id);
  });
}

/// Negatives depend on pairs and splits; recomputing either invalidates them.
void drop_negatives(Corpus& corpus) {
  for (const auto& [name, pairs] : corpus.negatives) fs::remove(corpus.paths.negatives(name));
  corpus.negatives.clear();
  std::erase_if(corpus.loops, [](const LoopRecord& l) { return l.derived_from.has_value(); });
}

}  // namespace

StageResult extract_stage(Corpus& corpus, const Settings& settings) {
  StageResult result;
  Stamps stamps(corpus.paths);
  std::uint64_t h = 0;
  for (const auto& s : corpus.songs) {
    h = fnv1a(s.song_id + "|" + s.audio_path + "|" + (s.bpm_hint ? num(*s.bpm_hint) : "-"), h);
    h = hash_file(corpus.paths.root / s.audio_path, h);
  }
  const std::string stamp =
      stamp_of({hex64(h), num(settings.rank), num(settings.iterations), std::to_string(settings.seed)});
  if (stamps.get("extract") == stamp) {
    result.skipped = true;
    return result;
  }
  stamps.erase("extract");
  corpus.paths.create_directories();

  struct Job {
    SongRecord song;
    json layout;
    std::vector<LoopRecord> loops;
    std::string error;
  };
  std::vector<Job> jobs;
  for (const auto& s : corpus.songs) jobs.push_back(Job{s, {}, {}, {}});
  const fs::path root = corpus.paths.root;

  parallel_for(jobs.size(), settings.jobs, [&](std::size_t i) {
    Job& job = jobs[i];
    const std::string& id = job.song.song_id;
    try {
      const auto clip = audio::read_wav(root / job.song.audio_path);
      const auto grid = extract::build_bar_grid(clip, job.song.bpm_hint);
      const auto tensor = extract::tensorize(clip, grid);
      const std::size_t rank = settings.rank ? settings.rank : extract::default_rank(tensor.bars);
      const auto model = extract::ntf_factorize(tensor, rank, settings.iterations, mix_seed(settings.seed, fnv1a(id)));

      json loops = json::array();
      for (std::size_t r = 0; r < model.rank; ++r) {
        extract::ExtractedLoop loop;
        try {
          loop = extract::extract_loop_audio(clip, grid, model, r);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::NoInstance) continue;
          throw;
        }
        LoopRecord rec;
        rec.loop_id = loop_id_for(id, r);
        rec.song_id = id;
        rec.audio_path = loop_audio_rel(rec.loop_id);
        rec.duration = loop.audio.duration();
        rec.source_bar = loop.source_bar;
        rec.activation_total = loop.activation_total;
        rec.hash = dedup::average_hash(extract::reconstruct_loop_spectrogram(model, r)).hex();
        audio::write_wav(root / rec.audio_path, loop.audio);
        loops.push_back({{"row", r}, {"loop_id", rec.loop_id}});
        job.loops.push_back(std::move(rec));
      }
      job.layout = {{"song_id", id},
                    {"bpm", grid.bpm},
                    {"downbeat_offset", grid.downbeat_offset},
                    {"bars", tensor.bars},
                    {"rank", model.rank},
                    {"final_objective", model.objective.empty() ? 0.0 : model.objective.back()},
                    {"layout", matrix_json(model.layout)},
                    {"loops", loops}};
    } catch (const Error& e) {
      job.error = e.what();
    }
  });

  corpus.loops.clear();
  for (auto& job : jobs) {
    const fs::path lp = layout_path(corpus, job.song.song_id);
    if (!job.error.empty()) {
      result.failures.push_back(job.song.song_id + ": " + job.error);
      fs::remove(lp);
      continue;
    }
    write_atomic(lp, job.layout.dump(1) + "\n");
    for (auto& l : job.loops) corpus.loops.push_back(std::move(l));
    ++result.processed;
  }
  save_loops(corpus);
  stamps.set("extract", stamp);
  return result;
}

StageResult dedup_stage(Corpus& corpus, const Settings& settings) {
  StageResult result;
  Stamps stamps(corpus.paths);
  const std::string stamp = stamp_of({stamps.get("extract"), num(settings.max_loops_per_song)});
  if (!stamps.get("extract").empty() && stamps.get("dedup") == stamp) {
    result.skipped = true;
    return result;
  }
  stamps.erase("dedup");
  drop_negatives(corpus);

  std::map<std::string, const LoopRecord*> by_id;
  for (const auto& l : corpus.loops) by_id[l.loop_id] = &l;
  std::vector<LoopRecord> kept_loops;

  for (const auto& song : corpus.songs) {
    const fs::path lp = layout_path(corpus, song.song_id);
    if (!fs::exists(lp)) continue;
    json doc = json::parse(read_text(lp));
    const Matrix layout = matrix_from_json(doc.at("layout"));

    std::vector<std::size_t> rows;
    std::vector<const LoopRecord*> records;
    std::vector<dedup::LoopCandidate> candidates;
    for (const auto& entry : doc.at("loops")) {
      const auto it = by_id.find(entry.at("loop_id").get<std::string>());
      if (it == by_id.end()) continue;
      rows.push_back(entry.at("row").get<std::size_t>());
      records.push_back(it->second);
      candidates.push_back({dedup::SpectrogramHash::from_hex(it->second->hash), it->second->activation_total});
    }
    Matrix sub(rows.size(), layout.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy(layout.row(rows[i]).begin(), layout.row(rows[i]).end(), sub.row(i).begin());
    }

    dedup::DedupResult dd = dedup::dedup_loops(candidates);
    if (settings.max_loops_per_song && dd.kept.size() > settings.max_loops_per_song) {
      std::vector<std::size_t> ranked = dd.kept;
      std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].activation_total > candidates[b].activation_total;
      });
      ranked.resize(settings.max_loops_per_song);
      std::sort(ranked.begin(), ranked.end());
      std::erase_if(dd.merged_into, [&](const auto& kv) {
        return !std::binary_search(ranked.begin(), ranked.end(), kv.second);
      });
      dd.kept = std::move(ranked);
    }
    const Matrix refined = dedup::refine_layout(sub, dd);

    json ids = json::array();
    for (std::size_t k : dd.kept) {
      kept_loops.push_back(*records[k]);
      ids.push_back(records[k]->loop_id);
    }
    json merged = json::object();
    for (auto [loser, survivor] : dd.merged_into) merged[records[loser]->loop_id] = records[survivor]->loop_id;
    doc["refined"] = {{"loop_ids", ids}, {"layout", matrix_json(refined)}, {"merged", merged}};
    write_atomic(lp, doc.dump(1) + "\n");
    ++result.processed;
  }
  corpus.loops = std::move(kept_loops);
  save_loops(corpus);
  stamps.set("dedup", stamp);
  return result;
}

StageResult pairs_stage(Corpus& corpus, const Settings& settings) {
  StageResult result;
  Stamps stamps(corpus.paths);
  const std::string stamp = stamp_of({stamps.get("dedup"), num(settings.threshold)});
  if (!stamps.get("dedup").empty() && stamps.get("pairs") == stamp && fs::exists(corpus.paths.pairs())) {
    result.skipped = true;
    return result;
  }
  stamps.erase("pairs");
  drop_negatives(corpus);
  save_loops(corpus);
  corpus.pairs.clear();
  for (const auto& song : corpus.songs) {
    const fs::path lp = layout_path(corpus, song.song_id);
    if (!fs::exists(lp)) continue;
    const json doc = json::parse(read_text(lp));
    if (!doc.contains("refined")) continue;
    const auto ids = doc["refined"].at("loop_ids").get<std::vector<std::string>>();
    const Matrix layout = matrix_from_json(doc["refined"].at("layout"));
    if (ids.empty()) continue;
    auto pairs = dedup::derive_pairs(layout, ids, song.song_id, settings.threshold);
    for (auto& p : pairs) corpus.pairs.push_back(std::move(p));
    ++result.processed;
  }
  save_pairs(corpus);
  stamps.set("pairs", stamp);
  return result;
}

StageResult split_stage(Corpus& corpus, const Settings& settings) {
  StageResult result;
  Stamps stamps(corpus.paths);
  const std::string stamp = stamp_of({stamps.get("pairs"), std::to_string(settings.seed), num(settings.test_songs)});
  if (!stamps.get("pairs").empty() && stamps.get("split") == stamp && corpus.has_splits()) {
    result.skipped = true;
    return result;
  }
  stamps.erase("split");
  drop_negatives(corpus);
  save_loops(corpus);
  const SplitResult split = split_songs(corpus.pairs, settings.seed, settings.test_songs);
  for (auto& s : corpus.songs) {
    const auto it = split.split_of.find(s.song_id);
    s.split = it == split.split_of.end() ? "" : it->second;
    const auto tp = split.test_pair_of.find(s.song_id);
    s.test_pair = tp == split.test_pair_of.end() ? "" : tp->second;
    if (!s.split.empty()) ++result.processed;
  }
  save_songs(corpus);
  stamps.set("split", stamp);
  return result;
}

StageResult negatives_stage(Corpus& corpus, const Settings& settings, const std::string& strategy,
                            const negatives::DrumBassDetector* detector) {
  const auto& names = negative_set_names();
  require(std::find(names.begin(), names.end(), strategy) != names.end(), ErrorKind::InvalidInput,
          "unknown negative strategy '" + strategy + "'");
  StageResult result;
  Stamps stamps(corpus.paths);
  const std::string key = "negatives_" + strategy;
  const std::string stamp = stamp_of({stamps.get("pairs"), stamps.get("split"), strategy,
                                      std::to_string(settings.seed), num(settings.neg_ratio)});
  if (!stamps.get("pairs").empty() && stamps.get(key) == stamp && fs::exists(corpus.paths.negatives(strategy)) &&
      detector == nullptr) {
    result.skipped = true;
    return result;
  }
  stamps.erase(key);

  negatives::SamplingConfig config;
  config.equal = strategy == "equal";
  if (!config.equal) config.strategy = dedup::parse_strategy(strategy);
  config.neg_pos_ratio = settings.neg_ratio;

  const std::vector<std::string> groups =
      corpus.has_splits() ? std::vector<std::string>{"train", "val"} : std::vector<std::string>{""};
  const fs::path root = corpus.paths.root;
  std::map<std::string, std::string> audio_of;
  for (const auto& l : corpus.loops) audio_of[l.loop_id] = l.audio_path;

  std::vector<dedup::LoopPair> all_pairs;
  std::vector<negatives::ManipulatedLoop> made;
  for (const auto& group : groups) {
    std::vector<dedup::LoopPair> positives;
    for (const auto& p : corpus.pairs) {
      if (corpus.split_of(p) == group) positives.push_back(p);
    }
    if (positives.empty()) continue;
    negatives::NegativeSources sources;
    for (const auto& l : corpus.loops) {
      if (l.derived_from) continue;
      const SongRecord* s = corpus.song(l.song_id);
      if (s && s->split == group) sources.loops.push_back({l.loop_id, l.song_id});
    }
    sources.load = [&](const std::string& id) {
      const auto it = audio_of.find(id);
      require(it != audio_of.end(), ErrorKind::InvalidInput, "unknown loop '" + id + "'");
      return audio::read_wav(root / it->second);
    };
    sources.detector = detector;
    config.seed = mix_seed(settings.seed, fnv1a(strategy + ":" + group));
    auto set = negatives::build_negative_set(positives, sources, config);
    for (auto& p : set.pairs) all_pairs.push_back(std::move(p));
    for (auto& m : set.manipulated) made.push_back(std::move(m));
    ++result.processed;
  }

  std::set<std::string> known;
  for (const auto& l : corpus.loops) known.insert(l.loop_id);
  std::sort(made.begin(), made.end(), [](const auto& a, const auto& b) { return a.loop_id < b.loop_id; });
  for (const auto& m : made) {
    if (known.contains(m.loop_id)) continue;
    const LoopRecord* target = corpus.loop(m.derived_from);
    LoopRecord rec;
    rec.loop_id = m.loop_id;
    rec.song_id = m.song_id;
    rec.audio_path = loop_audio_rel(m.loop_id);
    rec.duration = m.audio.duration();
    rec.source_bar = target ? target->source_bar : 0;
    rec.derived_from = m.derived_from;
    rec.strategy = m.strategy;
    audio::write_wav(root / rec.audio_path, m.audio);
    corpus.loops.push_back(std::move(rec));
    known.insert(m.loop_id);
  }
  corpus.negatives[strategy] = std::move(all_pairs);
  collect_garbage(corpus);
  // Originals first in extraction order, then manipulated loops by id.
  std::stable_partition(corpus.loops.begin(), corpus.loops.end(),
                        [](const LoopRecord& l) { return !l.derived_from.has_value(); });
  const auto first_derived = std::find_if(corpus.loops.begin(), corpus.loops.end(),
                                          [](const LoopRecord& l) { return l.derived_from.has_value(); });
  std::sort(first_derived, corpus.loops.end(),
            [](const LoopRecord& a, const LoopRecord& b) { return a.loop_id < b.loop_id; });
  save_negatives(corpus, strategy);
  save_loops(corpus);
  stamps.set(key, stamp);
  return result;
}

StageResult featurize_stage(Corpus& corpus, const Settings& settings) {
  StageResult result;
  Stamps stamps(corpus.paths);
  const std::string stamp = stamp_of({hex64(hash_file(corpus.paths.loops(), 0))});
  if (stamps.get("featurize") == stamp) {
    result.skipped = true;
    return result;
  }
  stamps.erase("featurize");
  corpus.paths.create_directories();
  const fs::path root = corpus.paths.root;
  const CorpusPaths paths = corpus.paths;
  const std::vector<LoopRecord> loops = corpus.loops;
  std::vector<std::string> errors(loops.size());

  const audio::StftConfig stft;
  const json params = {{"sample_rate", audio::kCanonicalRate},
                       {"window", stft.window},
                       {"hop", stft.hop},
                       {"window_kind", "hamming"},
                       {"centered", true},
                       {"mel_bins", audio::kMelBins},
                       {"mel_scale", "slaney"},
                       {"mel_norm", "slaney"},
                       {"log_epsilon", audio::kLogEpsilon},
                       {"log_floor_db_below_max", 80.0},
                       {"frames", audio::kLoopFrames}};
  write_atomic(paths.spectrograms() / "params.json", params.dump(1) + "\n");

  parallel_for(loops.size(), settings.jobs, [&](std::size_t i) {
    const LoopRecord& l = loops[i];
    try {
      const auto clip = audio::read_wav(root / l.audio_path);
      save_matrix(paths.spectrograms() / (l.loop_id + ".bin"), audio::loop_features(clip).values);
      const auto f = mash::beat_sync_features(clip);
      const json j = {{"chroma", matrix_json(f.chroma)},
                      {"rhythm", matrix_json(f.rhythm)},
                      {"bands", f.bands},
                      {"silent", f.silent}};
      write_atomic(paths.features() / (l.loop_id + ".json"), j.dump() + "\n");
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < loops.size(); ++i) {
    if (errors[i].empty()) {
      ++result.processed;
    } else {
      result.failures.push_back(loops[i].loop_id + ": " + errors[i]);
    }
  }
  if (result.failures.empty()) stamps.set("featurize", stamp);
  return result;
}

std::vector<std::pair<std::string, StageResult>> run_pipeline(Corpus& corpus, const Settings& settings) {
  std::vector<std::pair<std::string, StageResult>> log;
  auto guarded = [&](const std::string& name, const std::function<StageResult()>& stage) {
    try {
      log.emplace_back(name, stage());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientData) throw;
      StageResult r;
      r.failures.push_back(e.what());
      log.emplace_back(name, r);
    }
  };
  log.emplace_back("extract", extract_stage(corpus, settings));
  log.emplace_back("dedup", dedup_stage(corpus, settings));
  log.emplace_back("pairs", pairs_stage(corpus, settings));
  guarded("split", [&] { return split_stage(corpus, settings); });
  for (const auto& name : negative_set_names()) {
    guarded("negatives_" + name, [&] { return negatives_stage(corpus, settings, name); });
  }
  log.emplace_back("featurize", featurize_stage(corpus, settings));
  return log;
}

}  // namespace loopcompat::store
