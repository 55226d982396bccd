#include "loopcompat/audio/clip.hpp"

#include <algorithm>
#include <cmath>

#include "loopcompat/error.hpp"

namespace loopcompat::audio {

void validate(const AudioClip& clip) {
  require(clip.sample_rate > 0, ErrorKind::InvalidInput, "sample rate must be positive");
  for (double s : clip.samples) {
    require(std::isfinite(s), ErrorKind::InvalidInput, "non-finite sample");
  }
}

double energy(const AudioClip& clip) {
  double e = 0.0;
  for (double s : clip.samples) e += s * s;
  return e;
}

double rms(const AudioClip& clip) {
  if (clip.empty()) return 0.0;
  return std::sqrt(energy(clip) / static_cast<double>(clip.size()));
}

AudioClip peak_normalize(AudioClip clip, double peak) {
  double m = 0.0;
  for (double s : clip.samples) m = std::max(m, std::abs(s));
  if (m > 0.0) {
    const double g = peak / m;
    for (double& s : clip.samples) s *= g;
  }
  return clip;
}

AudioClip mix(const AudioClip& a, const AudioClip& b) {
  require(a.sample_rate == b.sample_rate, ErrorKind::InvalidInput, "cannot mix clips of different rates");
  AudioClip out;
  out.sample_rate = a.sample_rate;
  out.samples.assign(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out.samples[i] += a.samples[i];
  for (std::size_t i = 0; i < b.size(); ++i) out.samples[i] += b.samples[i];
  return out;
}

bool is_canonical_loop(const AudioClip& clip) {
  return clip.sample_rate == kCanonicalRate && clip.size() == kLoopSamples;
}

}  // namespace loopcompat::audio
