#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "loopcompat/dedup/average_hash.hpp"
#include "loopcompat/dedup/loop_pair.hpp"
#include "loopcompat/extract/ntf.hpp"

namespace loopcompat::dedup {

inline constexpr int kDuplicateDistance = 5;
inline constexpr double kActivityThreshold = 0.2;

struct LoopCandidate {
  SpectrogramHash hash;
  double activation_total = 0.0;
};

struct DedupResult {
  std::vector<std::size_t> kept;                 // ascending input indices
  std::map<std::size_t, std::size_t> merged_into;  // loser -> surviving index
};

/// Merges loops whose hashes differ in fewer than 5 bits. Duplicate chains
/// are resolved transitively; each group keeps its highest-activation member
/// (lowest index on ties).
DedupResult dedup_loops(const std::vector<LoopCandidate>& loops);

/// Sums merged rows into their survivors, drops the merged rows, then scales
/// each bar (column) so its maximum is 1. All-zero columns stay zero. Rows of
/// the result follow `result.kept`.
extract::LoopLayout refine_layout(const extract::LoopLayout& layout, const DedupResult& result);

struct CoActivity {
  std::size_t a = 0;  // a < b, row indices into the layout
  std::size_t b = 0;
  int bars = 0;
};

/// Unordered pairs of loops that are both active (activation >= threshold)
/// in at least one bar, with the number of such bars.
std::vector<CoActivity> co_active_pairs(const extract::LoopLayout& layout, double threshold = kActivityThreshold);

/// Positive pairs keyed by loop ids (one id per layout row). loop_a is the
/// lexicographically smaller id; output is sorted by (loop_a, loop_b).
std::vector<LoopPair> derive_pairs(const extract::LoopLayout& layout, const std::vector<std::string>& loop_ids,
                                   const std::string& song_id, double threshold = kActivityThreshold);

}  // namespace loopcompat::dedup
