#include "loopcompat/extract/loop_audio.hpp"

#include <algorithm>
#include <cmath>

#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/audio/stretch.hpp"
#include "loopcompat/error.hpp"

namespace loopcompat::extract {
namespace {

// Spreads a mel-band mask over linear STFT bins, weighting each band by its
// filter response. Bins outside every filter copy the nearest covered bin.
Matrix mel_mask_to_linear(const Matrix& mel_mask_frames, const Matrix& filterbank) {
  const std::size_t frames = mel_mask_frames.rows;
  const std::size_t mels = filterbank.rows;
  const std::size_t bins = filterbank.cols;

  std::vector<double> coverage(bins, 0.0);
  for (std::size_t m = 0; m < mels; ++m) {
    for (std::size_t k = 0; k < bins; ++k) coverage[k] += filterbank(m, k);
  }
  std::vector<std::size_t> source(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    if (coverage[k] > 0.0) {
      source[k] = k;
      continue;
    }
    std::size_t best = k;
    for (std::size_t d = 1; d < bins; ++d) {
      if (k >= d && coverage[k - d] > 0.0) { best = k - d; break; }
      if (k + d < bins && coverage[k + d] > 0.0) { best = k + d; break; }
    }
    source[k] = best;
  }

  Matrix out(frames, bins);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t s = source[k];
      if (coverage[s] <= 0.0) {
        out(t, k) = 1.0;
        continue;
      }
      double acc = 0.0;
      for (std::size_t m = 0; m < mels; ++m) acc += filterbank(m, s) * mel_mask_frames(t, m);
      out(t, k) = acc / coverage[s];
    }
  }
  return out;
}

}  // namespace

std::size_t best_instance(const NtfModel& model, std::size_t loop) {
  require(loop < model.rank, ErrorKind::InvalidInput, "loop index out of range");
  std::size_t best = 0;
  double value = 0.0;
  for (std::size_t b = 0; b < model.bars(); ++b) {
    if (model.layout(loop, b) > value) {
      value = model.layout(loop, b);
      best = b;
    }
  }
  require(value > 0.0, ErrorKind::NoInstance, "loop " + std::to_string(loop) + " is never active");
  return best;
}

ExtractedLoop extract_loop_audio(const audio::AudioClip& clip, const BarGrid& grid, const NtfModel& model,
                                 std::size_t loop) {
  const std::size_t bar = best_instance(model, loop);
  require(bar < grid.bar_count, ErrorKind::InvalidInput, "model and bar grid disagree on bar count");

  const auto excerpt = bar_audio(clip, grid, bar);
  const audio::StftConfig cfg{2048, 512, audio::WindowKind::Hamming};
  auto spec = audio::stft_complex(excerpt.samples, cfg);

  // Mask on the model grid, floored, then resampled along time to STFT frames.
  const Matrix mask = loop_masks(model, bar)[loop];
  Matrix per_frame(spec.frames, mask.cols);
  for (std::size_t j = 0; j < spec.frames; ++j) {
    const double pos = spec.frames > 1 ? static_cast<double>(j) * static_cast<double>(mask.rows - 1) / static_cast<double>(spec.frames - 1) : 0.0;
    const auto lo = std::min(static_cast<std::size_t>(pos), mask.rows - 1);
    const std::size_t hi = std::min(lo + 1, mask.rows - 1);
    const double w = pos - static_cast<double>(lo);
    for (std::size_t m = 0; m < mask.cols; ++m) {
      const double v = (1.0 - w) * mask(lo, m) + w * mask(hi, m);
      per_frame(j, m) = std::max(v, kMaskFloor);
    }
  }
  const Matrix linear = mel_mask_to_linear(per_frame, audio::mel_filterbank(clip.sample_rate, cfg.window, mask.cols));
  for (std::size_t j = 0; j < spec.frames; ++j) {
    for (std::size_t k = 0; k < spec.bins; ++k) spec.at(j, k) *= linear(j, k);
  }

  audio::AudioClip separated;
  separated.sample_rate = clip.sample_rate;
  separated.samples = audio::istft(spec, cfg, excerpt.size());

  ExtractedLoop out;
  out.source_bar = bar;
  for (double a : model.layout.row(loop)) out.activation_total += a;
  out.audio = audio::time_stretch(separated, audio::kLoopSeconds);
  return out;
}

}  // namespace loopcompat::extract
