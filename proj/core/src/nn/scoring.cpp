#include "loopcompat/nn/scoring.hpp"

#include "loopcompat/error.hpp"
#include "loopcompat/nn/loss.hpp"

namespace loopcompat::nn {

namespace {
void require_canonical(const audio::AudioClip& clip, const char* which) {
  require(audio::is_canonical_loop(clip), ErrorKind::InvalidInput,
          std::string(which) + " is not a canonical 2 s, 44100 Hz loop");
}
}  // namespace

audio::AudioClip mix_pair(const audio::AudioClip& a, const audio::AudioClip& b) {
  return audio::peak_normalize(audio::mix(a, b));
}

std::vector<Matrix> pair_features(const audio::AudioClip& a, const audio::AudioClip& b, Mixing mixing) {
  if (mixing == Mixing::Sum) return {audio::loop_features(mix_pair(a, b)).values};
  return {audio::loop_features(a).values, audio::loop_features(b).values};
}

double cnn_score(const audio::AudioClip& source, const audio::AudioClip& target, Predictor& cnn) {
  require_canonical(source, "source");
  require_canonical(target, "target");
  const auto features = pair_features(source, target, cnn.checkpoint().train.mixing);
  const Matrix* second = features.size() > 1 ? &features[1] : nullptr;
  const auto p = second ? cnn.probabilities({&features[0]}, {second}) : cnn.probabilities({&features[0]});
  return p.front();
}

std::vector<double> snn_embed(const audio::MelSpectrogram& mel, Predictor& snn) {
  return snn.embeddings({&mel.values}).front();
}

double snn_distance(const std::vector<double>& a, const std::vector<double>& b) { return euclidean_distance(a, b); }

}  // namespace loopcompat::nn
