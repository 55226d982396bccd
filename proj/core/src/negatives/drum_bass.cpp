#include "loopcompat/negatives/drum_bass.hpp"

#include <algorithm>
#include <vector>

#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/error.hpp"

namespace loopcompat::negatives {
namespace {

constexpr std::size_t kMedianKernel = 31;

double median_of(std::vector<double>& scratch) {
  const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
  std::nth_element(scratch.begin(), mid, scratch.end());
  return *mid;
}

// Median along one axis with a centred window truncated at the edges.
Matrix median_filter(const Matrix& m, bool along_rows) {
  Matrix out(m.rows, m.cols);
  const std::size_t half = kMedianKernel / 2;
  std::vector<double> scratch;
  scratch.reserve(kMedianKernel);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      scratch.clear();
      if (along_rows) {
        const std::size_t lo = r >= half ? r - half : 0;
        const std::size_t hi = std::min(m.rows, r + half + 1);
        for (std::size_t i = lo; i < hi; ++i) scratch.push_back(m(i, c));
      } else {
        const std::size_t lo = c >= half ? c - half : 0;
        const std::size_t hi = std::min(m.cols, c + half + 1);
        for (std::size_t i = lo; i < hi; ++i) scratch.push_back(m(r, i));
      }
      out(r, c) = median_of(scratch);
    }
  }
  return out;
}

}  // namespace

SpectralBalance analyse_drum_bass(const audio::AudioClip& clip) {
  require(!clip.empty(), ErrorKind::Undeterminable, "empty clip");
  const auto spec = audio::stft(clip);
  const Matrix& s = spec.magnitudes;

  double total = 0.0;
  for (double v : s.data) total += v * v;
  require(total > 1e-12, ErrorKind::Undeterminable, "silent clip");

  // Rows are frames: filtering across rows smooths in time (harmonic layer),
  // across columns smooths in frequency (percussive layer).
  const Matrix harmonic = median_filter(s, true);
  const Matrix percussive = median_filter(s, false);

  SpectralBalance out;
  double perc = 0.0, low = 0.0;
  const double bin_hz = static_cast<double>(clip.sample_rate) / static_cast<double>(spec.window);
  for (std::size_t f = 0; f < s.rows; ++f) {
    for (std::size_t k = 0; k < s.cols; ++k) {
      const double e = s(f, k) * s(f, k);
      const double h2 = harmonic(f, k) * harmonic(f, k);
      const double p2 = percussive(f, k) * percussive(f, k);
      const double denom = h2 + p2;
      const double mask = denom > 0.0 ? p2 / denom : 0.5;
      perc += mask * e;
      if (static_cast<double>(k) * bin_hz < kBassCutoffHz) low += e;
    }
  }
  out.percussive_fraction = perc / total;
  out.bass_fraction = low / total;
  return out;
}

bool HeuristicDetector::is_pure_drum_or_bass(const std::string&, const audio::AudioClip& clip) const {
  return negatives::is_pure_drum_or_bass(clip);
}

LabelledDetector::LabelledDetector(std::map<std::string, bool> labels,
                                   std::shared_ptr<const DrumBassDetector> fallback)
    : labels_(std::move(labels)), fallback_(std::move(fallback)) {}

bool LabelledDetector::is_pure_drum_or_bass(const std::string& loop_id, const audio::AudioClip& clip) const {
  if (auto it = labels_.find(loop_id); it != labels_.end()) return it->second;
  if (fallback_) return fallback_->is_pure_drum_or_bass(loop_id, clip);
  return negatives::is_pure_drum_or_bass(clip);
}

bool is_pure_drum_or_bass(const audio::AudioClip& clip) {
  const auto balance = analyse_drum_bass(clip);
  return balance.percussive_fraction > kPercussiveFraction || balance.bass_fraction >= kBassFraction;
}

}  // namespace loopcompat::negatives
