#include "loopcompat/store/ingest.hpp"

#include <set>

#include "loopcompat/audio/resample.hpp"
#include "loopcompat/audio/wav.hpp"
#include "loopcompat/error.hpp"

namespace loopcompat::store {

namespace {
void check_id(const std::string& id) {
  require(!id.empty() && id.find_first_of("/\\|+:") == std::string::npos && id.find("__") == std::string::npos &&
              id != "." && id != "..",
          ErrorKind::InvalidInput, "song id '" + id + "' must be non-empty and free of / \\ | + : and __");
}
}  // namespace

Corpus ingest(const std::filesystem::path& song_list, const std::filesystem::path& corpus_root) {
  require(fs::exists(song_list), ErrorKind::IngestError, "song list not found: " + song_list.string());
  const auto entries = read_jsonl<SongRecord>(song_list);
  const fs::path base = song_list.has_parent_path() ? song_list.parent_path() : fs::path(".");

  Corpus corpus;
  corpus.paths.root = corpus_root;
  corpus.paths.create_directories();

  std::set<std::string> seen;
  for (const auto& entry : entries) {
    check_id(entry.song_id);
    require(seen.insert(entry.song_id).second, ErrorKind::InvalidInput, "duplicate song id " + entry.song_id);
    const fs::path source = fs::path(entry.audio_path).is_absolute() ? fs::path(entry.audio_path)
                                                                      : base / entry.audio_path;
    require(fs::exists(source), ErrorKind::IngestError, "audio file not found: " + source.string());
    const audio::AudioClip clip = audio::resample(audio::read_wav(source), audio::kCanonicalRate);

    SongRecord song = entry;
    song.audio_path = (fs::path("audio") / "songs" / (entry.song_id + ".wav")).generic_string();
    song.split.clear();
    song.test_pair.clear();
    audio::write_wav(corpus_root / song.audio_path, clip);
    corpus.songs.push_back(std::move(song));
  }
  save_songs(corpus);
  return corpus;
}

}  // namespace loopcompat::store
