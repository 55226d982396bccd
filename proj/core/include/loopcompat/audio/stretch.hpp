#pragma once

#include "loopcompat/audio/clip.hpp"

namespace loopcompat::audio {

/// Phase-vocoder time stretch to exactly round(target_seconds * rate)
/// samples, preserving pitch. Input duration must lie in (0.25 s, 16 s).
AudioClip time_stretch(const AudioClip& clip, double target_seconds = kLoopSeconds);

/// Stretch to an explicit sample count (no duration precondition beyond a
/// non-empty input).
AudioClip time_stretch_to(const AudioClip& clip, std::size_t target_samples);

}  // namespace loopcompat::audio
