#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "loopcompat/nn/checkpoint.hpp"

namespace loopcompat::store {

/// Tunables shared by the pipeline and CLI. Every field can be overridden
/// from a key=value file.
struct Settings {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  // extraction
  std::size_t rank = 0;  // 0: chosen from the bar count
  std::size_t iterations = 200;
  std::size_t max_loops_per_song = 0;  // 0: no cap
  double threshold = 0.2;

  // negatives
  double neg_ratio = 1.0;

  // splits
  std::size_t test_songs = 100;

  // evaluation
  std::size_t candidates = 100;
  bool corpus_wide_candidates = false;

  nn::TrainConfig train;

  /// Applies one override; InvalidInput for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Lines of `key = value`; blank lines and lines starting with # are ignored.
  void load(const std::filesystem::path& path);
};

}  // namespace loopcompat::store
