#pragma once

#include <array>
#include <cstddef>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/matrix.hpp"

namespace loopcompat::mash {

inline constexpr std::size_t kPitchClasses = 12;
inline constexpr std::size_t kSubdivisions = 8;
inline constexpr std::size_t kBands = 3;
inline constexpr double kLowBandHz = 250.0;
inline constexpr double kHighBandHz = 2500.0;
inline constexpr std::size_t kChromaWindow = 8192;
inline constexpr std::size_t kChromaHop = 1024;

/// Beat-synchronous description of a loop. Pitch class 0 is C, 9 is A.
struct BeatSyncFeatures {
  Matrix chroma;                       // beats x 12, rows sum to 1 (0 when silent)
  Matrix rhythm;                       // beats x 8 onset strengths
  std::array<double, kBands> bands{};  // low / mid / high energy share, sums to 1
  bool silent = false;
};

/// Pitch class of a frequency in Hz (equal temperament, A4 = 440 Hz).
std::size_t pitch_class(double hz);

/// Requires a canonical loop; beats are its four equal quarters.
BeatSyncFeatures beat_sync_features(const audio::AudioClip& clip, std::size_t beats = 4);

}  // namespace loopcompat::mash
