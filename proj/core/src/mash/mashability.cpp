#include "loopcompat/mash/mashability.hpp"

#include <algorithm>
#include <cmath>

#include "loopcompat/error.hpp"

namespace loopcompat::mash {

double cosine(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::ShapeError, "cosine: size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

namespace {
double best_rotation(const Matrix& fixed, const Matrix& moving) {
  double best = -1.0;
  Matrix rotated(moving.rows, kPitchClasses);
  for (std::size_t shift = 0; shift < kPitchClasses; ++shift) {
    for (std::size_t r = 0; r < moving.rows; ++r) {
      for (std::size_t p = 0; p < kPitchClasses; ++p) rotated(r, (p + shift) % kPitchClasses) = moving(r, p);
    }
    best = std::max(best, cosine(fixed.data, rotated.data));
  }
  return best;
}
}  // namespace

double harmonic_similarity(const Matrix& chroma_a, const Matrix& chroma_b) {
  require(chroma_a.rows == chroma_b.rows && chroma_a.cols == kPitchClasses && chroma_b.cols == kPitchClasses,
          ErrorKind::ShapeError, "chroma matrices must share a beats x 12 shape");
  // Rotate each side in turn so the result is bitwise symmetric.
  const double best = std::max(best_rotation(chroma_a, chroma_b), best_rotation(chroma_b, chroma_a));
  return std::clamp(best, 0.0, 1.0);
}

double rhythmic_similarity(const Matrix& rhythm_a, const Matrix& rhythm_b) {
  require(rhythm_a.rows == rhythm_b.rows && rhythm_a.cols == rhythm_b.cols, ErrorKind::ShapeError,
          "rhythm matrices differ in shape");
  return std::clamp(cosine(rhythm_a.data, rhythm_b.data), 0.0, 1.0);
}

double spectral_balance(const std::array<double, kBands>& a, const std::array<double, kBands>& b) {
  auto one_way = [](const std::array<double, kBands>& x, const std::array<double, kBands>& y) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < kBands; ++i) l1 += std::abs(x[i] - (1.0 - y[i]) / static_cast<double>(kBands - 1));
    return 1.0 - 0.5 * l1;
  };
  return std::clamp(0.5 * (one_way(a, b) + one_way(b, a)), 0.0, 1.0);
}

Mashability mashability(const BeatSyncFeatures& a, const BeatSyncFeatures& b) {
  if (a.silent || b.silent) fail(ErrorKind::Undeterminable, "mashability of a silent loop");
  Mashability m;
  m.harmonic = harmonic_similarity(a.chroma, b.chroma);
  m.rhythmic = rhythmic_similarity(a.rhythm, b.rhythm);
  m.balance = spectral_balance(a.bands, b.bands);
  m.score = (m.harmonic + m.rhythmic + m.balance) / 3.0;
  return m;
}

Mashability mashability(const audio::AudioClip& a, const audio::AudioClip& b) {
  return mashability(beat_sync_features(a), beat_sync_features(b));
}

}  // namespace loopcompat::mash
