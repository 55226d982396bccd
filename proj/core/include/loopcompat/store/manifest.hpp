#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loopcompat/dedup/loop_pair.hpp"

namespace loopcompat::store {

namespace fs = std::filesystem;

struct SongRecord {
  std::string song_id;
  std::string audio_path;  // relative to the corpus root
  std::optional<double> bpm_hint;
  std::optional<std::string> license_tag;
  std::string split;      // "", "train", "val" or "test"
  std::string test_pair;  // the held-out pair of a test song

  friend bool operator==(const SongRecord&, const SongRecord&) = default;
};

struct LoopRecord {
  std::string loop_id;
  std::string song_id;
  std::string audio_path;  // relative to the corpus root
  double duration = 2.0;
  std::size_t source_bar = 0;
  double activation_total = 0.0;
  std::string hash;  // 16 hex digits; empty for manipulated loops
  std::optional<std::string> derived_from;
  dedup::Strategy strategy = dedup::Strategy::Original;

  friend bool operator==(const LoopRecord&, const LoopRecord&) = default;
};

void to_json(nlohmann::json& j, const SongRecord& s);
void from_json(const nlohmann::json& j, SongRecord& s);
void to_json(nlohmann::json& j, const LoopRecord& l);
void from_json(const nlohmann::json& j, LoopRecord& l);

/// File layout of a corpus directory.
struct CorpusPaths {
  fs::path root;

  fs::path songs() const { return root / "songs.jsonl"; }
  fs::path loops() const { return root / "loops.jsonl"; }
  fs::path pairs() const { return root / "pairs.jsonl"; }
  fs::path negatives(const std::string& strategy) const { return root / ("negatives_" + strategy + ".jsonl"); }
  fs::path stages() const { return root / "stages.json"; }
  fs::path song_audio_dir() const { return root / "audio" / "songs"; }
  fs::path loop_audio_dir() const { return root / "audio" / "loops"; }
  fs::path layouts() const { return root / "layouts"; }
  fs::path spectrograms() const { return root / "spectrograms"; }
  fs::path features() const { return root / "features"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path reports() const { return root / "reports"; }

  void create_directories() const;
};

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

template <class T>
void write_jsonl(const fs::path& path, const std::vector<T>& items) {
  std::string text;
  for (const auto& item : items) {
    text += nlohmann::json(item).dump();
    text += '\n';
  }
  write_atomic(path, text);
}

/// Missing file reads as an empty list. Malformed lines are InvalidInput
/// naming the file and line.
template <class T>
std::vector<T> read_jsonl(const fs::path& path);

/// Everything a corpus directory describes.
struct Corpus {
  CorpusPaths paths;
  std::vector<SongRecord> songs;
  std::vector<LoopRecord> loops;
  std::vector<dedup::LoopPair> pairs;
  std::map<std::string, std::vector<dedup::LoopPair>> negatives;  // keyed by strategy name

  /// Lookups maintain a lazily rebuilt index and are not thread-safe.
  const SongRecord* song(const std::string& id) const;
  const LoopRecord* loop(const std::string& id) const;
  fs::path loop_audio(const std::string& loop_id) const;
  /// Split of a pair: the split of its song, or of both songs for
  /// between-song pairs ("" if they disagree or are unassigned).
  std::string split_of(const dedup::LoopPair& pair) const;
  bool has_splits() const;

 private:
  mutable std::map<std::string, std::size_t> song_index_, loop_index_;
};

Corpus load_corpus(const fs::path& root);
void save_songs(const Corpus& corpus);
void save_loops(const Corpus& corpus);
void save_pairs(const Corpus& corpus);
void save_negatives(const Corpus& corpus, const std::string& strategy);

/// Referential-integrity problems (empty when the corpus is consistent):
/// unique ids, pairs naming existing loops, loop audio present and canonical,
/// acyclic provenance, no song spread over several splits.
std::vector<std::string> validate(const Corpus& corpus, bool check_audio = true);

}  // namespace loopcompat::store
