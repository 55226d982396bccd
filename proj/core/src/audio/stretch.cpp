#include "loopcompat/audio/stretch.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/error.hpp"

namespace loopcompat::audio {
namespace {

double wrap_phase(double p) {
  return p - 2.0 * std::numbers::pi * std::round(p / (2.0 * std::numbers::pi));
}

}  // namespace

AudioClip time_stretch_to(const AudioClip& clip, std::size_t target_samples) {
  require(!clip.empty(), ErrorKind::InvalidInput, "time stretch of an empty clip");
  require(target_samples > 0, ErrorKind::InvalidInput, "target length must be positive");
  if (clip.size() == target_samples) return clip;

  const StftConfig cfg{2048, 512, WindowKind::Hann};
  const auto in = stft_complex(clip.samples, cfg);
  const std::size_t bins = in.bins;
  const double rate = static_cast<double>(clip.size()) / static_cast<double>(target_samples);

  // Enough synthesis frames to cover the target length after centre trimming.
  const std::size_t out_frames = frame_count(target_samples, cfg.hop) + 1;
  ComplexSpectrogram out;
  out.frames = out_frames;
  out.bins = bins;
  out.values.assign(out_frames * bins, {0.0, 0.0});

  std::vector<double> expected(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    expected[k] = 2.0 * std::numbers::pi * static_cast<double>(k * cfg.hop) / static_cast<double>(cfg.window);
  }

  auto column = [&](std::size_t f, std::size_t k) -> std::complex<double> {
    return f < in.frames ? in.at(f, k) : std::complex<double>{0.0, 0.0};
  };

  std::vector<double> phase(bins);
  for (std::size_t k = 0; k < bins; ++k) phase[k] = std::arg(in.at(0, k));

  const double last = static_cast<double>(in.frames - 1);
  for (std::size_t j = 0; j < out_frames; ++j) {
    const double t = std::min(static_cast<double>(j) * rate, last);
    const auto left = static_cast<std::size_t>(std::floor(t));
    const double alpha = t - static_cast<double>(left);
    for (std::size_t k = 0; k < bins; ++k) {
      const auto c0 = column(left, k);
      const auto c1 = column(left + 1, k);
      const double mag = (1.0 - alpha) * std::abs(c0) + alpha * std::abs(c1);
      out.at(j, k) = std::polar(mag, phase[k]);
      const double dphi = wrap_phase(std::arg(c1) - std::arg(c0) - expected[k]);
      phase[k] += expected[k] + dphi;
    }
  }

  AudioClip result;
  result.sample_rate = clip.sample_rate;
  result.samples = istft(out, cfg, target_samples);
  return result;
}

AudioClip time_stretch(const AudioClip& clip, double target_seconds) {
  require(clip.sample_rate > 0, ErrorKind::InvalidInput, "sample rate must be positive");
  const double d = clip.duration();
  require(d > 0.25 && d < 16.0, ErrorKind::InvalidInput, "time stretch input must last between 0.25 s and 16 s");
  require(target_seconds > 0.0, ErrorKind::InvalidInput, "target duration must be positive");
  const auto target = static_cast<std::size_t>(std::llround(target_seconds * clip.sample_rate));
  return time_stretch_to(clip, target);
}

}  // namespace loopcompat::audio
