#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "loopcompat/dedup/loop_pair.hpp"

namespace loopcompat::store {

struct SplitResult {
  std::map<std::string, std::string> split_of;     // song -> train / val / test
  std::map<std::string, std::string> test_pair_of;  // test song -> held-out pair id
};

/// Song-level split of the songs that have positive pairs. `test_songs` songs
/// are held out first with one random pair each; the rest is divided so that
/// validation holds about a fifth of the remaining pairs, walking the songs
/// in seeded random order. Needs at least five songs besides the test songs
/// (InsufficientData).
SplitResult split_songs(const std::vector<dedup::LoopPair>& positives, std::uint64_t seed, std::size_t test_songs);

}  // namespace loopcompat::store
