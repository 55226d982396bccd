#pragma once

#include <cstddef>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/extract/bar_grid.hpp"
#include "loopcompat/extract/ntf.hpp"

namespace loopcompat::extract {

inline constexpr double kMaskFloor = 1e-3;

struct ExtractedLoop {
  audio::AudioClip audio;  // canonical 2-s loop
  std::size_t source_bar = 0;
  double activation_total = 0.0;
};

/// Index of the bar with the largest activation for `loop` (first on ties).
/// Throws NoInstance when the row is all zero.
std::size_t best_instance(const NtfModel& model, std::size_t loop);

/// Renders the best instance of `loop`: the bar excerpt is filtered by the
/// loop's soft mask (floored at 1e-3) in the STFT domain and time-stretched
/// to two seconds.
ExtractedLoop extract_loop_audio(const audio::AudioClip& clip, const BarGrid& grid, const NtfModel& model,
                                 std::size_t loop);

}  // namespace loopcompat::extract
