#pragma once

#include <cstddef>
#include <vector>

namespace loopcompat::audio {

inline constexpr int kCanonicalRate = 44100;
inline constexpr double kLoopSeconds = 2.0;
inline constexpr std::size_t kLoopSamples = 88200;

/// Mono PCM audio. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  friend bool operator==(const AudioClip&, const AudioClip&) = default;
};

/// Throws InvalidInput on a non-positive rate or non-finite samples.
void validate(const AudioClip& clip);

double energy(const AudioClip& clip);
double rms(const AudioClip& clip);

/// Scales so the largest absolute sample is `peak` (no-op on silence).
AudioClip peak_normalize(AudioClip clip, double peak = 1.0);

/// Sample-wise sum of two clips of equal rate, padded to the longer length.
AudioClip mix(const AudioClip& a, const AudioClip& b);

/// Canonical loop: 44.1 kHz, exactly 88200 samples.
bool is_canonical_loop(const AudioClip& clip);

}  // namespace loopcompat::audio
