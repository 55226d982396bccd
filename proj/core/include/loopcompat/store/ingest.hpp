#pragma once

#include <filesystem>

#include "loopcompat/store/manifest.hpp"

namespace loopcompat::store {

/// Reads a JSONL song list ({song_id, audio_path, bpm_hint?, license_tag?};
/// paths relative to the list), converts each song to mono 44.1 kHz under
/// the corpus and writes songs.jsonl. Source files are never modified.
/// Unreadable audio is an IngestError naming the file.
Corpus ingest(const std::filesystem::path& song_list, const std::filesystem::path& corpus_root);

}  // namespace loopcompat::store
