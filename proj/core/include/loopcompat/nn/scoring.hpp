#pragma once

#include <vector>

#include "loopcompat/audio/clip.hpp"
#include "loopcompat/audio/spectral.hpp"
#include "loopcompat/nn/train.hpp"

namespace loopcompat::nn {

/// Peak-normalized sum of two canonical loops.
audio::AudioClip mix_pair(const audio::AudioClip& a, const audio::AudioClip& b);

/// CNN input features for a pair under the given mixing mode: one matrix for
/// Sum, two for Stack.
std::vector<Matrix> pair_features(const audio::AudioClip& a, const audio::AudioClip& b, Mixing mixing);

/// Compatibility probability of two canonical loops (InvalidInput otherwise).
double cnn_score(const audio::AudioClip& source, const audio::AudioClip& target, Predictor& cnn);

std::vector<double> snn_embed(const audio::MelSpectrogram& mel, Predictor& snn);

/// Euclidean distance between embeddings (ShapeError on size mismatch).
double snn_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace loopcompat::nn
