#include "loopcompat/audio/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fft.hpp"
#include "loopcompat/error.hpp"

namespace loopcompat::audio {
namespace {

// numpy-style "reflect" (edge sample not repeated), periodic for long pads.
std::size_t reflect_index(std::ptrdiff_t j, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  j %= period;
  if (j < 0) j += period;
  if (j >= static_cast<std::ptrdiff_t>(n)) j = period - j;
  return static_cast<std::size_t>(j);
}

double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz >= min_log_hz) return min_log_mel + std::log(hz / min_log_hz) / logstep;
  return hz / f_sp;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel >= min_log_mel) return min_log_hz * std::exp(logstep * (mel - min_log_mel));
  return f_sp * mel;
}

}  // namespace

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length);
  const double a0 = kind == WindowKind::Hamming ? 0.54 : 0.5;
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = a0 - (1.0 - a0) * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(length));
  }
  return w;
}

std::size_t frame_count(std::size_t length, std::size_t hop) { return 1 + length / hop; }

ComplexSpectrogram stft_complex(std::span<const double> samples, const StftConfig& config) {
  require(!samples.empty(), ErrorKind::InvalidInput, "stft of an empty signal");
  require(config.window > 0 && config.hop > 0, ErrorKind::InvalidInput, "window and hop must be positive");

  const std::size_t n = samples.size();
  const std::size_t win = config.window;
  const auto pad = static_cast<std::ptrdiff_t>(win / 2);
  const auto window = make_window(config.kind, win);

  ComplexSpectrogram out;
  out.frames = frame_count(n, config.hop);
  out.bins = win / 2 + 1;
  out.values.resize(out.frames * out.bins);

  std::vector<double> frame(win);
  for (std::size_t f = 0; f < out.frames; ++f) {
    const auto start = static_cast<std::ptrdiff_t>(f * config.hop) - pad;
    for (std::size_t i = 0; i < win; ++i) {
      frame[i] = samples[reflect_index(start + static_cast<std::ptrdiff_t>(i), n)] * window[i];
    }
    detail::rfft(frame, std::span(out.values).subspan(f * out.bins, out.bins));
  }
  return out;
}

std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& config, std::size_t length) {
  const std::size_t win = config.window;
  require(spec.bins == win / 2 + 1, ErrorKind::InvalidInput, "istft bin count does not match window");
  const auto window = make_window(config.kind, win);
  const std::size_t pad = win / 2;
  const std::size_t total = std::max(length + 2 * pad, (spec.frames == 0 ? 0 : (spec.frames - 1) * config.hop) + win);

  std::vector<double> acc(total, 0.0);
  std::vector<double> norm(total, 0.0);
  std::vector<double> frame(win);
  const double scale = 1.0 / static_cast<double>(win);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    detail::irfft(std::span(spec.values).subspan(f * spec.bins, spec.bins), frame);
    const std::size_t start = f * config.hop;
    for (std::size_t i = 0; i < win; ++i) {
      acc[start + i] += frame[i] * scale * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  std::vector<double> out(length, 0.0);
  const double tiny = 1e-10;
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t j = i + pad;
    if (j < total && norm[j] > tiny) out[i] = acc[j] / norm[j];
  }
  return out;
}

Spectrogram stft(const AudioClip& clip, std::size_t window, std::size_t hop) {
  require(!clip.empty(), ErrorKind::InvalidInput, "stft of an empty clip");
  const auto cs = stft_complex(clip.samples, {window, hop, WindowKind::Hamming});
  Spectrogram spec;
  spec.window = window;
  spec.hop = hop;
  spec.magnitudes = Matrix(cs.frames, cs.bins);
  for (std::size_t i = 0; i < cs.values.size(); ++i) spec.magnitudes.data[i] = std::abs(cs.values[i]);
  return spec;
}

Matrix mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels) {
  const std::size_t bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(nyquist);

  std::vector<double> mel_hz(n_mels + 2);
  for (std::size_t i = 0; i < n_mels + 2; ++i) {
    mel_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }

  Matrix fb(n_mels, bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = mel_hz[m], mid = mel_hz[m + 1], hi = mel_hz[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double lower = (f - lo) / (mid - lo);
      const double upper = (hi - f) / (hi - mid);
      fb(m, k) = std::max(0.0, std::min(lower, upper)) * enorm;
    }
  }
  return fb;
}

Matrix mel_energies(const Spectrogram& spec, int sample_rate, std::size_t n_mels) {
  const std::size_t n_fft = spec.window;
  require(spec.bins() == n_fft / 2 + 1, ErrorKind::InvalidInput, "spectrogram bins do not match window size");
  const Matrix fb = mel_filterbank(sample_rate, n_fft, n_mels);

  Matrix mel(spec.frames(), n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    // Filters are sparse; restrict the dot product to the support.
    const auto row = fb.row(m);
    std::size_t first = 0, last = row.size();
    while (first < last && row[first] == 0.0) ++first;
    while (last > first && row[last - 1] == 0.0) --last;
    for (std::size_t f = 0; f < spec.frames(); ++f) {
      const auto mag = spec.magnitudes.row(f);
      double acc = 0.0;
      for (std::size_t k = first; k < last; ++k) acc += row[k] * mag[k];
      mel(f, m) = acc;
    }
  }
  return mel;
}

MelSpectrogram logmel(const Spectrogram& spec, std::size_t n_mels, int sample_rate) {
  require(spec.window == 2048 && spec.bins() == 1025, ErrorKind::InvalidInput,
          "logmel expects a 2048-point spectrogram with 1025 bins");
  MelSpectrogram out;
  out.values = mel_energies(spec, sample_rate, n_mels);
  double peak = -std::numeric_limits<double>::infinity();
  for (double& v : out.values.data) {
    v = std::log(v + kLogEpsilon);
    peak = std::max(peak, v);
  }
  out.floor = peak - kLogDynamicRange;
  for (double& v : out.values.data) v = std::max(v, out.floor);
  return out;
}

MelSpectrogram loop_features(const AudioClip& clip) { return logmel(stft(clip)); }

}  // namespace loopcompat::audio
