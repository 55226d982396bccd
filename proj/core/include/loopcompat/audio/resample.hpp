#pragma once

#include "loopcompat/audio/clip.hpp"

namespace loopcompat::audio {

/// Windowed-sinc (Kaiser) band-limited resampling. Output length is
/// round(n * target / source). Equal rates return the input unchanged.
AudioClip resample(const AudioClip& clip, int target_rate = kCanonicalRate);

}  // namespace loopcompat::audio
