#include "loopcompat/store/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "loopcompat/audio/wav.hpp"
#include "loopcompat/error.hpp"

namespace loopcompat::store {

using nlohmann::json;

void to_json(json& j, const SongRecord& s) {
  j = json{{"song_id", s.song_id}, {"audio_path", s.audio_path}};
  if (s.bpm_hint) j["bpm_hint"] = *s.bpm_hint;
  if (s.license_tag) j["license_tag"] = *s.license_tag;
  if (!s.split.empty()) j["split"] = s.split;
  if (!s.test_pair.empty()) j["test_pair"] = s.test_pair;
}

void from_json(const json& j, SongRecord& s) {
  s.song_id = j.at("song_id").get<std::string>();
  s.audio_path = j.at("audio_path").get<std::string>();
  s.bpm_hint = j.contains("bpm_hint") && !j["bpm_hint"].is_null() ? std::optional(j["bpm_hint"].get<double>())
                                                                   : std::nullopt;
  s.license_tag = j.contains("license_tag") && !j["license_tag"].is_null()
                      ? std::optional(j["license_tag"].get<std::string>())
                      : std::nullopt;
  s.split = j.value("split", "");
  s.test_pair = j.value("test_pair", "");
}

void to_json(json& j, const LoopRecord& l) {
  j = json{{"loop_id", l.loop_id},
           {"song_id", l.song_id},
           {"audio_path", l.audio_path},
           {"duration", l.duration},
           {"source_bar", l.source_bar},
           {"activation_total", l.activation_total},
           {"hash", l.hash},
           {"strategy", dedup::to_string(l.strategy)}};
  if (l.derived_from) j["derived_from"] = *l.derived_from;
}

void from_json(const json& j, LoopRecord& l) {
  l.loop_id = j.at("loop_id").get<std::string>();
  l.song_id = j.at("song_id").get<std::string>();
  l.audio_path = j.at("audio_path").get<std::string>();
  l.duration = j.value("duration", 2.0);
  l.source_bar = j.value("source_bar", std::size_t{0});
  l.activation_total = j.value("activation_total", 0.0);
  l.hash = j.value("hash", "");
  l.strategy = dedup::parse_strategy(j.value("strategy", "original"));
  l.derived_from = j.contains("derived_from") ? std::optional(j["derived_from"].get<std::string>()) : std::nullopt;
}

void CorpusPaths::create_directories() const {
  for (const auto& dir : {root, song_audio_dir(), loop_audio_dir(), layouts(), spectrograms(), features(),
                          checkpoints(), reports()}) {
    fs::create_directories(dir);
  }
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::InvalidInput, "cannot write " + tmp.string());
    out << text;
    out.flush();
    require(out.good(), ErrorKind::InvalidInput, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::InvalidInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class T>
std::vector<T> read_jsonl(const fs::path& path) {
  std::vector<T> out;
  if (!fs::exists(path)) return out;
  std::ifstream in(path);
  require(in.good(), ErrorKind::InvalidInput, "cannot read " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const std::exception& e) {
      fail(ErrorKind::InvalidInput, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

template std::vector<SongRecord> read_jsonl<SongRecord>(const fs::path&);
template std::vector<LoopRecord> read_jsonl<LoopRecord>(const fs::path&);
template std::vector<dedup::LoopPair> read_jsonl<dedup::LoopPair>(const fs::path&);

namespace {

// Index lookups that rebuild themselves whenever the record list has changed
// underneath them.
template <class Record, class Key>
const Record* indexed_find(const std::vector<Record>& records, std::map<std::string, std::size_t>& index,
                           const std::string& id, Key key) {
  auto hit = [&]() -> const Record* {
    const auto it = index.find(id);
    if (it == index.end() || it->second >= records.size()) return nullptr;
    return key(records[it->second]) == id ? &records[it->second] : nullptr;
  };
  if (index.size() == records.size()) {
    if (const Record* r = hit()) return r;
  }
  index.clear();
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(key(records[i]), i);
  return hit();
}

}  // namespace

const SongRecord* Corpus::song(const std::string& id) const {
  return indexed_find(songs, song_index_, id, [](const SongRecord& s) -> const std::string& { return s.song_id; });
}

const LoopRecord* Corpus::loop(const std::string& id) const {
  return indexed_find(loops, loop_index_, id, [](const LoopRecord& l) -> const std::string& { return l.loop_id; });
}

fs::path Corpus::loop_audio(const std::string& loop_id) const {
  const LoopRecord* l = loop(loop_id);
  require(l != nullptr, ErrorKind::InvalidInput, "unknown loop '" + loop_id + "'");
  return paths.root / l->audio_path;
}

std::string Corpus::split_of(const dedup::LoopPair& pair) const {
  auto song_split = [&](const std::string& loop_id) -> std::string {
    const LoopRecord* l = loop(loop_id);
    if (!l) return "";
    const SongRecord* s = song(l->song_id);
    return s ? s->split : "";
  };
  const std::string a = song_split(pair.loop_a);
  return a == song_split(pair.loop_b) ? a : "";
}

bool Corpus::has_splits() const {
  for (const auto& s : songs) {
    if (!s.split.empty()) return true;
  }
  return false;
}

Corpus load_corpus(const fs::path& root) {
  Corpus c;
  c.paths.root = root;
  c.songs = read_jsonl<SongRecord>(c.paths.songs());
  c.loops = read_jsonl<LoopRecord>(c.paths.loops());
  c.pairs = read_jsonl<dedup::LoopPair>(c.paths.pairs());
  if (fs::exists(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      const std::string name = entry.path().filename().string();
      const std::string prefix = "negatives_", suffix = ".jsonl";
      if (name.size() > prefix.size() + suffix.size() && name.starts_with(prefix) && name.ends_with(suffix)) {
        const std::string strategy = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
        c.negatives[strategy] = read_jsonl<dedup::LoopPair>(entry.path());
      }
    }
  }
  return c;
}

void save_songs(const Corpus& corpus) { write_jsonl(corpus.paths.songs(), corpus.songs); }
void save_loops(const Corpus& corpus) { write_jsonl(corpus.paths.loops(), corpus.loops); }
void save_pairs(const Corpus& corpus) { write_jsonl(corpus.paths.pairs(), corpus.pairs); }

void save_negatives(const Corpus& corpus, const std::string& strategy) {
  const auto it = corpus.negatives.find(strategy);
  require(it != corpus.negatives.end(), ErrorKind::InvalidInput, "no negatives for strategy " + strategy);
  write_jsonl(corpus.paths.negatives(strategy), it->second);
}

std::vector<std::string> validate(const Corpus& corpus, bool check_audio) {
  std::vector<std::string> problems;
  std::set<std::string> song_ids, loop_ids;
  static const std::set<std::string> kSplits = {"", "train", "val", "test"};

  for (const auto& s : corpus.songs) {
    if (!song_ids.insert(s.song_id).second) problems.push_back("duplicate song id " + s.song_id);
    if (!kSplits.count(s.split)) problems.push_back("song " + s.song_id + " has unknown split '" + s.split + "'");
  }
  std::map<std::string, const LoopRecord*> by_id;
  for (const auto& l : corpus.loops) {
    if (!loop_ids.insert(l.loop_id).second) problems.push_back("duplicate loop id " + l.loop_id);
    by_id[l.loop_id] = &l;
    if (!song_ids.count(l.song_id)) problems.push_back("loop " + l.loop_id + " names unknown song " + l.song_id);
    if (check_audio) {
      const fs::path p = corpus.paths.root / l.audio_path;
      if (!fs::exists(p)) {
        problems.push_back("loop " + l.loop_id + " audio missing: " + p.string());
      } else {
        try {
          if (!audio::is_canonical_loop(audio::read_wav(p))) {
            problems.push_back("loop " + l.loop_id + " audio is not a canonical 2 s loop");
          }
        } catch (const Error& e) {
          problems.push_back("loop " + l.loop_id + ": " + e.what());
        }
      }
    }
  }
  for (const auto& l : corpus.loops) {
    std::set<std::string> chain{l.loop_id};
    const LoopRecord* cur = &l;
    while (cur->derived_from) {
      const auto it = by_id.find(*cur->derived_from);
      if (it == by_id.end()) {
        problems.push_back("loop " + cur->loop_id + " derives from unknown loop " + *cur->derived_from);
        break;
      }
      if (!chain.insert(it->first).second) {
        problems.push_back("provenance cycle through loop " + l.loop_id);
        break;
      }
      cur = it->second;
    }
  }

  const bool splits = corpus.has_splits();
  auto check_pairs = [&](const std::vector<dedup::LoopPair>& pairs, const std::string& file) {
    std::set<std::string> ids;
    for (const auto& p : pairs) {
      if (!ids.insert(p.pair_id).second) problems.push_back(file + ": duplicate pair id " + p.pair_id);
      for (const auto* id : {&p.loop_a, &p.loop_b}) {
        if (!loop_ids.count(*id)) problems.push_back(file + ": pair " + p.pair_id + " names unknown loop " + *id);
      }
      if (splits && loop_ids.count(p.loop_a) && loop_ids.count(p.loop_b) && corpus.split_of(p).empty()) {
        problems.push_back(file + ": pair " + p.pair_id + " crosses splits");
      }
    }
  };
  check_pairs(corpus.pairs, "pairs.jsonl");
  for (const auto& [strategy, pairs] : corpus.negatives) check_pairs(pairs, "negatives_" + strategy + ".jsonl");

  std::set<std::string> pair_ids;
  for (const auto& p : corpus.pairs) pair_ids.insert(p.pair_id);
  for (const auto& s : corpus.songs) {
    if (!s.test_pair.empty() && !pair_ids.count(s.test_pair)) {
      problems.push_back("song " + s.song_id + " holds out unknown pair " + s.test_pair);
    }
  }
  return problems;
}

}  // namespace loopcompat::store
