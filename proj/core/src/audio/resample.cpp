#include "loopcompat/audio/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "loopcompat/error.hpp"

namespace loopcompat::audio {
namespace {

constexpr double kZeroCrossings = 32.0;
constexpr double kKaiserBeta = 8.6;
constexpr std::size_t kTableDensity = 1024;  // kernel samples per zero crossing

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double x, double i0_beta) {
  // x in [-1, 1]
  const double t = 1.0 - x * x;
  if (t <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(t)) / i0_beta;
}

// Windowed sinc tabulated over |u| in [0, kZeroCrossings], u in zero-crossing
// units, read back with linear interpolation.
const std::vector<double>& kernel_table() {
  static const std::vector<double> table = [] {
    const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
      const auto size = static_cast<std::size_t>(kZeroCrossings) * kTableDensity + 2;
    std::vector<double> t(size, 0.0);
    for (std::size_t i = 0; i < size; ++i) {
      const double u = static_cast<double>(i) / kTableDensity;
      t[i] = sinc(u) * kaiser(u / kZeroCrossings, i0_beta);
    }
    return t;
  }();
  return table;
}

double kernel(double u) {
  const auto& t = kernel_table();
  const double pos = std::abs(u) * kTableDensity;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= t.size()) return 0.0;
  const double frac = pos - static_cast<double>(i);
  return t[i] + frac * (t[i + 1] - t[i]);
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  require(clip.sample_rate > 0 && target_rate > 0, ErrorKind::InvalidInput, "sample rates must be positive");
  if (clip.sample_rate == target_rate) return clip;

  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(clip.size()) * ratio));
  // Cutoff relative to the input Nyquist; lowpass when downsampling.
  const double cutoff = std::min(1.0, ratio);
  const double half_width = kZeroCrossings / cutoff;
  const auto n = static_cast<std::ptrdiff_t>(clip.size());

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double d = t - static_cast<double>(j);
      acc += clip.samples[static_cast<std::size_t>(j)] * cutoff * kernel(cutoff * d);
    }
    out.samples[i] = acc;
  }
  return out;
}

}  // namespace loopcompat::audio
