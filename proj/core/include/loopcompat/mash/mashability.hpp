#pragma once

#include <array>
#include <span>

#include "loopcompat/mash/features.hpp"

namespace loopcompat::mash {

struct Mashability {
  double harmonic = 0.0;  // best cosine over the 12 chroma rotations
  double rhythmic = 0.0;  // cosine of the onset patterns
  double balance = 0.0;   // spectral-gap complementarity
  double score = 0.0;     // equal-weight mean, all terms in [0, 1]
};

/// Cosine similarity; 1 when both vectors are zero, 0 when only one is.
double cosine(std::span<const double> a, std::span<const double> b);

double harmonic_similarity(const Matrix& chroma_a, const Matrix& chroma_b);
double rhythmic_similarity(const Matrix& rhythm_a, const Matrix& rhythm_b);

/// Mean of 1 - L1(a, (1 - b) / 2) / 2 and the same with a and b swapped.
double spectral_balance(const std::array<double, kBands>& a, const std::array<double, kBands>& b);

/// Throws Undeterminable when either side is silent.
Mashability mashability(const BeatSyncFeatures& a, const BeatSyncFeatures& b);
Mashability mashability(const audio::AudioClip& a, const audio::AudioClip& b);

}  // namespace loopcompat::mash
