#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/extract/bar_grid.hpp"
#include "loopcompat/matrix.hpp"

namespace loopcompat::extract {

/// bars x frames_per_bar x mel_bins, non-negative mel energies.
struct SongTensor {
  std::size_t bars = 0;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  SongTensor() = default;
  SongTensor(std::size_t b, std::size_t t, std::size_t f) : bars(b), frames(t), bins(f), values(b * t * f, 0.0) {}

  double& at(std::size_t b, std::size_t t, std::size_t f) { return values[(b * frames + t) * bins + f]; }
  const double& at(std::size_t b, std::size_t t, std::size_t f) const { return values[(b * frames + t) * bins + f]; }

  /// One bar as a frames x bins matrix.
  Matrix slice(std::size_t b) const;
};

inline constexpr std::size_t kFramesPerBar = 64;

/// Per-bar mel energies (pre-log) linearly resampled to `frames_per_bar`.
/// Each bar is analysed on its own excerpt so identical bars give identical
/// slices. Requires at least 4 bars (TooShort).
SongTensor tensorize(const audio::AudioClip& clip, const BarGrid& grid, std::size_t frames_per_bar = kFramesPerBar);

/// Loop-layout activations, loops x bars.
using LoopLayout = Matrix;

/// Song model: each loop l is a recipe-weighted mixture of rank-one
/// (rhythm x sound) components, placed in bars by the layout:
///
///   X[b,t,f] ~= sum_l layout[l,b] * sum_r recipes[l,r] * rhythm[r,t] * sound[r,f]
struct NtfModel {
  std::size_t rank = 0;
  Matrix sound;    // rank x bins
  Matrix rhythm;   // rank x frames
  Matrix recipes;  // rank(loops) x rank(components)
  LoopLayout layout;  // rank x bars
  std::vector<double> objective;  // KL divergence after each iteration

  std::size_t frames() const { return rhythm.cols; }
  std::size_t bins() const { return sound.cols; }
  std::size_t bars() const { return layout.cols; }
};

/// Generalized KL divergence D(X || Xhat), with 0 log 0 = 0.
double kl_divergence(const SongTensor& x, const SongTensor& approx);

/// Full model reconstruction Xhat.
SongTensor reconstruct(const NtfModel& model);

/// ||X - Xhat||_F / ||X||_F (0 when X is all zero).
double relative_error(const SongTensor& x, const SongTensor& approx);

/// Multiplicative-update KL factorization. Factors are drawn from (0, 1] using
/// `seed`; each block update is a majorization step, so the objective never
/// increases. Throws InvalidInput for rank < 1 or non-finite/negative data.
NtfModel ntf_factorize(const SongTensor& tensor, std::size_t rank, std::size_t iterations = 200,
                       std::uint64_t seed = 0);

/// Loop template (frames x bins) for unit activation.
Matrix reconstruct_loop_spectrogram(const NtfModel& model, std::size_t loop);

/// Soft masks of every loop in bar `b`, each frames x bins. At every cell the
/// masks sum to one; cells with zero total reconstruction get 1/rank.
std::vector<Matrix> loop_masks(const NtfModel& model, std::size_t bar);

/// Default rank: min(8, bars / 2), at least 1.
std::size_t default_rank(std::size_t bars);

}  // namespace loopcompat::extract
