#include "loopcompat/extract/bar_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loopcompat/error.hpp"

namespace loopcompat::extract {
namespace {

constexpr double kSilenceEnergy = 1e-10;
// 80 dB of dynamic range on a power scale.
constexpr double kOnsetRange = 18.420680743952367;

double frames_per_second(int sample_rate) { return static_cast<double>(sample_rate) / kOnsetBlock; }

std::size_t downbeat_block(const std::vector<double>& onsets, double bar_blocks) {
  const std::size_t n = onsets.size();
  const auto candidates = static_cast<std::size_t>(std::ceil(bar_blocks));
  auto peak_near = [&](std::size_t p) {
    double m = 0.0;
    const std::size_t lo = p == 0 ? 0 : p - 1;
    for (std::size_t q = lo; q <= p + 1 && q < n; ++q) m = std::max(m, onsets[q]);
    return m;
  };

  // Peaks within one block count fully; the exact-position sum breaks ties so
  // the grid lands on the onset block itself.
  std::size_t best = 0;
  double best_score = -1.0, best_exact = -1.0;
  for (std::size_t phase = 0; phase < candidates && phase < n; ++phase) {
    double score = 0.0, exact = 0.0;
    for (std::size_t k = 0;; ++k) {
      const auto p = static_cast<std::size_t>(std::llround(static_cast<double>(phase) + k * bar_blocks));
      if (p >= n) break;
      score += peak_near(p);
      exact += onsets[p];
    }
    const bool tie = std::abs(score - best_score) <= 1e-12;
    if ((!tie && score > best_score) || (tie && exact > best_exact + 1e-12)) {
      best_score = score;
      best_exact = exact;
      best = phase;
    }
  }
  return best;
}

}  // namespace

std::size_t BarGrid::bar_start(std::size_t b, int sample_rate) const {
  return static_cast<std::size_t>(std::llround((downbeat_offset + static_cast<double>(b) * bar_seconds()) * sample_rate));
}

std::size_t BarGrid::bar_length(int sample_rate) const {
  return static_cast<std::size_t>(std::llround(bar_seconds() * sample_rate));
}

std::vector<double> onset_envelope(const audio::AudioClip& clip) {
  const std::size_t blocks = (clip.size() + kOnsetBlock - 1) / kOnsetBlock;
  std::vector<double> level(blocks);
  for (std::size_t t = 0; t < blocks; ++t) {
    double e = 0.0;
    const std::size_t end = std::min(clip.size(), (t + 1) * kOnsetBlock);
    for (std::size_t i = t * kOnsetBlock; i < end; ++i) e += clip.samples[i] * clip.samples[i];
    level[t] = std::log(e + kSilenceEnergy);
  }
  if (level.empty()) return {};

  const double top = *std::max_element(level.begin(), level.end());
  const double floor = top - kOnsetRange;
  for (double& v : level) v = std::max(v, floor);

  std::vector<double> onsets(blocks);
  double previous = std::max(std::log(kSilenceEnergy), floor);
  for (std::size_t t = 0; t < blocks; ++t) {
    onsets[t] = std::max(0.0, level[t] - previous);
    previous = level[t];
  }
  return onsets;
}

double estimate_bpm(const std::vector<double>& onsets, int sample_rate) {
  const double fps = frames_per_second(sample_rate);
  const auto min_lag = static_cast<std::size_t>(std::ceil(60.0 * fps / kMaxBpm));
  const auto max_lag = static_cast<std::size_t>(std::floor(60.0 * fps / kMinBpm));
  const std::size_t n = onsets.size();
  require(n > max_lag + 1, ErrorKind::EstimationFailed, "onset envelope too short for tempo estimation");

  const double mean = std::accumulate(onsets.begin(), onsets.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  double variance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = onsets[i] - mean;
    variance += centred[i] * centred[i];
  }
  require(variance > 1e-12, ErrorKind::EstimationFailed, "flat onset curve");

  std::vector<double> corr(max_lag + 2, 0.0);
  for (std::size_t lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += centred[i] * centred[i + lag];
    corr[lag] = acc;
  }

  std::size_t best = min_lag;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    if (corr[lag] > corr[best]) best = lag;
  }
  require(corr[best] > 1e-12 * variance, ErrorKind::EstimationFailed, "no periodicity in onset curve");

  double lag = static_cast<double>(best);
  const double a = corr[best - 1], b = corr[best], c = corr[best + 1];
  const double denom = a - 2.0 * b + c;
  if (denom < 0.0) lag += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return std::clamp(60.0 * fps / lag, kMinBpm, kMaxBpm);
}

BarGrid build_bar_grid(const audio::AudioClip& clip, std::optional<double> bpm_hint, int beats_per_bar) {
  require(clip.sample_rate > 0 && !clip.empty(), ErrorKind::InvalidInput, "bar grid needs a non-empty clip");
  require(beats_per_bar > 0, ErrorKind::InvalidInput, "beats per bar must be positive");

  const auto onsets = onset_envelope(clip);
  BarGrid grid;
  grid.beats_per_bar = beats_per_bar;
  if (bpm_hint) {
    require(*bpm_hint >= kMinBpm && *bpm_hint <= kMaxBpm, ErrorKind::InvalidInput, "bpm hint outside [40, 240]");
    grid.bpm = *bpm_hint;
  } else {
    require(clip.duration() >= 8.0, ErrorKind::InvalidInput, "tempo estimation needs at least 8 s of audio");
    grid.bpm = estimate_bpm(onsets, clip.sample_rate);
  }

  const double bar_blocks = grid.bar_seconds() * frames_per_second(clip.sample_rate);
  const std::size_t phase = downbeat_block(onsets, bar_blocks);
  grid.downbeat_offset = static_cast<double>(phase * kOnsetBlock) / clip.sample_rate;

  const double usable = clip.duration() - grid.downbeat_offset;
  grid.bar_count = usable > 0.0 ? static_cast<std::size_t>(std::floor(usable / grid.bar_seconds() + 1e-9)) : 0;
  return grid;
}

audio::AudioClip bar_audio(const audio::AudioClip& clip, const BarGrid& grid, std::size_t b) {
  const std::size_t start = grid.bar_start(b, clip.sample_rate);
  const std::size_t len = grid.bar_length(clip.sample_rate);
  audio::AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(len, 0.0);
  for (std::size_t i = 0; i < len && start + i < clip.size(); ++i) out.samples[i] = clip.samples[start + i];
  return out;
}

}  // namespace loopcompat::extract
