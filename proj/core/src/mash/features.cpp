#include "loopcompat/mash/features.hpp"

#include <cmath>

#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/extract/bar_grid.hpp"

namespace loopcompat::mash {

namespace {
constexpr double kMinPitchHz = 27.5;
constexpr double kMaxPitchHz = 5000.0;
constexpr double kSilentPower = 1e-12;
}  // namespace

std::size_t pitch_class(double hz) {
  require(hz > 0.0, ErrorKind::InvalidInput, "pitch class of a non-positive frequency");
  const long semitone = std::lround(12.0 * std::log2(hz / 440.0));
  return static_cast<std::size_t>(((semitone + 9) % 12 + 12) % 12);
}

BeatSyncFeatures beat_sync_features(const audio::AudioClip& clip, std::size_t beats) {
  require(audio::is_canonical_loop(clip), ErrorKind::InvalidInput, "mashability features need a canonical loop");
  require(beats > 0, ErrorKind::InvalidInput, "beat count must be positive");
  const double beat_len = static_cast<double>(clip.size()) / static_cast<double>(beats);

  BeatSyncFeatures out;
  out.chroma = Matrix(beats, kPitchClasses);
  out.rhythm = Matrix(beats, kSubdivisions);

  const auto spec = audio::stft_complex(clip.samples, {kChromaWindow, kChromaHop, audio::WindowKind::Hann});
  const double bin_hz = static_cast<double>(clip.sample_rate) / static_cast<double>(kChromaWindow);
  std::vector<std::size_t> pc(spec.bins, kPitchClasses);
  for (std::size_t k = 1; k < spec.bins; ++k) {
    const double hz = bin_hz * static_cast<double>(k);
    if (hz >= kMinPitchHz && hz <= kMaxPitchHz) pc[k] = pitch_class(hz);
  }

  double band_total = 0.0;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const double centre = static_cast<double>(f * kChromaHop);
    const auto beat = std::min(beats - 1, static_cast<std::size_t>(centre / beat_len));
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const double power = std::norm(spec.at(f, k));
      const double hz = bin_hz * static_cast<double>(k);
      const std::size_t band = hz < kLowBandHz ? 0 : (hz < kHighBandHz ? 1 : 2);
      out.bands[band] += power;
      band_total += power;
      if (pc[k] < kPitchClasses) out.chroma(beat, pc[k]) += power;
    }
  }

  out.silent = band_total <= kSilentPower;
  if (out.silent) {
    out.bands.fill(1.0 / kBands);
    out.chroma = Matrix(beats, kPitchClasses);
    return out;
  }
  for (double& b : out.bands) b /= band_total;
  for (std::size_t b = 0; b < beats; ++b) {
    auto row = out.chroma.row(b);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum > kSilentPower) {
      for (double& v : row) v /= sum;
    } else {
      for (double& v : row) v = 0.0;
    }
  }

  // Sub-beat onset pattern; each onset block counts at its centre sample.
  const auto onsets = extract::onset_envelope(clip);
  const double sub_len = beat_len / static_cast<double>(kSubdivisions);
  for (std::size_t t = 0; t < onsets.size(); ++t) {
    const double centre = (static_cast<double>(t) + 0.5) * static_cast<double>(extract::kOnsetBlock);
    const auto slot = std::min(beats * kSubdivisions - 1, static_cast<std::size_t>(centre / sub_len));
    out.rhythm(slot / kSubdivisions, slot % kSubdivisions) += onsets[t];
  }
  return out;
}

}  // namespace loopcompat::mash
