#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "loopcompat/audio/clip.hpp"

namespace loopcompat::extract {

inline constexpr double kMinBpm = 40.0;
inline constexpr double kMaxBpm = 240.0;

/// Steady-tempo bar grid over a song.
struct BarGrid {
  double bpm = 120.0;
  double downbeat_offset = 0.0;  // seconds
  int beats_per_bar = 4;
  std::size_t bar_count = 0;

  double bar_seconds() const { return 60.0 / bpm * beats_per_bar; }
  /// First sample of bar `b` at the given rate.
  std::size_t bar_start(std::size_t b, int sample_rate) const;
  /// Length of one bar in samples (rounded).
  std::size_t bar_length(int sample_rate) const;
};

/// Onset-strength envelope: half-wave rectified log-energy difference over
/// non-overlapping 256-sample blocks. Block t covers samples [256t, 256t+256).
std::vector<double> onset_envelope(const audio::AudioClip& clip);
inline constexpr std::size_t kOnsetBlock = 256;

/// Tempo from the autocorrelation of the onset envelope; throws
/// EstimationFailed when the envelope has no periodicity.
double estimate_bpm(const std::vector<double>& onsets, int sample_rate);

/// With a hint the tempo is taken as given and only the downbeat offset is
/// estimated; otherwise the clip must be at least 8 s long.
BarGrid build_bar_grid(const audio::AudioClip& clip, std::optional<double> bpm_hint = std::nullopt,
                       int beats_per_bar = 4);

/// Audio of bar `b`, zero-padded if the song ends early.
audio::AudioClip bar_audio(const audio::AudioClip& clip, const BarGrid& grid, std::size_t b);

}  // namespace loopcompat::extract
