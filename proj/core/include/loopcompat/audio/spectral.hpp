#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/matrix.hpp"

namespace loopcompat::audio {

enum class WindowKind { Hamming, Hann };

/// Periodic window of the given length.
std::vector<double> make_window(WindowKind kind, std::size_t length);

struct StftConfig {
  std::size_t window = 2048;
  std::size_t hop = 512;
  WindowKind kind = WindowKind::Hamming;
};

/// Number of frames produced for `length` samples: the signal is reflect-padded
/// by window/2 on each side, giving 1 + length / hop frames.
std::size_t frame_count(std::size_t length, std::size_t hop);

/// frames x (window/2 + 1) complex spectrum.
struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(std::size_t f, std::size_t k) { return values[f * bins + k]; }
  const std::complex<double>& at(std::size_t f, std::size_t k) const { return values[f * bins + k]; }
};

/// Magnitude spectrogram, frames x bins.
struct Spectrogram {
  Matrix magnitudes;
  std::size_t window = 2048;
  std::size_t hop = 512;

  std::size_t frames() const { return magnitudes.rows; }
  std::size_t bins() const { return magnitudes.cols; }
};

/// Log-mel features, frames x mel bins. All values are >= floor.
struct MelSpectrogram {
  Matrix values;
  double floor = 0.0;

  std::size_t frames() const { return values.rows; }
  std::size_t bins() const { return values.cols; }
};

inline constexpr std::size_t kMelBins = 128;
inline constexpr std::size_t kLoopFrames = 173;
inline constexpr double kLogEpsilon = 1e-10;
/// 80 dB below the peak, in natural-log magnitude units.
inline constexpr double kLogDynamicRange = 80.0 / 20.0 * 2.302585092994046;

ComplexSpectrogram stft_complex(std::span<const double> samples, const StftConfig& config = {});

/// Overlap-add inverse with squared-window normalization; trims the centre
/// padding and returns exactly `length` samples.
std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& config, std::size_t length);

Spectrogram stft(const AudioClip& clip, std::size_t window = 2048, std::size_t hop = 512);

/// Slaney-style mel filterbank (area-normalized triangles, Slaney mel scale)
/// spanning 0 Hz to Nyquist. Shape n_mels x (n_fft/2 + 1).
Matrix mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels = kMelBins);

/// Mel energies of the magnitude spectrogram (frames x n_mels), no log.
Matrix mel_energies(const Spectrogram& spec, int sample_rate = kCanonicalRate,
                    std::size_t n_mels = kMelBins);

/// ln(mel + 1e-10), clamped at 80 dB below the maximum.
MelSpectrogram logmel(const Spectrogram& spec, std::size_t n_mels = kMelBins,
                      int sample_rate = kCanonicalRate);

/// stft + logmel with the model-input parameters.
MelSpectrogram loop_features(const AudioClip& clip);

}  // namespace loopcompat::audio
