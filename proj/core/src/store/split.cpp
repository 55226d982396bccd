#include "loopcompat/store/split.hpp"

#include <algorithm>

#include "loopcompat/error.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::store {

SplitResult split_songs(const std::vector<dedup::LoopPair>& positives, std::uint64_t seed, std::size_t test_songs) {
  std::map<std::string, std::vector<std::string>> pairs_of;  // song -> pair ids, sorted
  for (const auto& p : positives) {
    if (p.label == dedup::PairLabel::Positive) pairs_of[p.song_id].push_back(p.pair_id);
  }
  for (auto& [song, ids] : pairs_of) std::sort(ids.begin(), ids.end());

  std::vector<std::string> songs;
  for (const auto& [song, ids] : pairs_of) songs.push_back(song);
  if (songs.size() < test_songs + 5) {
    fail(ErrorKind::InsufficientData, std::to_string(songs.size()) + " songs with pairs; the split needs at least " +
                                          std::to_string(test_songs + 5));
  }

  Rng rng(mix_seed(seed, fnv1a("split")));
  rng.shuffle(songs);

  SplitResult out;
  for (std::size_t i = 0; i < test_songs; ++i) {
    const auto& ids = pairs_of[songs[i]];
    out.split_of[songs[i]] = "test";
    out.test_pair_of[songs[i]] = ids[rng.index(ids.size())];
  }

  std::size_t total = 0;
  for (std::size_t i = test_songs; i < songs.size(); ++i) total += pairs_of[songs[i]].size();
  const std::size_t target = (total + 2) / 5;  // round(total / 5)
  std::size_t val_pairs = 0, val_songs = 0;
  const std::size_t remaining = songs.size() - test_songs;
  for (std::size_t i = test_songs; i < songs.size(); ++i) {
    const std::size_t n = pairs_of[songs[i]].size();
    const bool last_chance = val_songs == 0 && i + 1 == songs.size();
    const bool fits = val_pairs + n <= target && val_songs + 1 < remaining;
    if (fits || last_chance) {
      out.split_of[songs[i]] = "val";
      val_pairs += n;
      ++val_songs;
    } else {
      out.split_of[songs[i]] = "train";
    }
  }
  return out;
}

}  // namespace loopcompat::store
