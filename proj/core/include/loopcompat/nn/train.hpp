#pragma once

#include <vector>

#include "loopcompat/matrix.hpp"
#include "loopcompat/nn/checkpoint.hpp"

namespace loopcompat::nn {

/// A labelled pair of indices into PairDataset::features. For the summing
/// CNN the features are already mixes, and `a == b` names the mix.
struct PairSample {
  std::size_t a = 0;
  std::size_t b = 0;
  double label = 0.0;  // 1 compatible, 0 not
};

struct PairDataset {
  std::vector<Matrix> features;  // log-mel, frames x mel bins
  std::vector<PairSample> pairs;
};

/// Minibatch SGD with seeded shuffling. Keeps the parameters with the lowest
/// validation loss. Throws InsufficientData on empty sets and
/// TrainingDiverged on a non-finite loss.
ModelCheckpoint train(const PairDataset& train_set, const PairDataset& val_set, const TrainConfig& config);

/// Inference wrapper around a checkpoint. Not thread-safe (layers cache
/// activations); give each thread its own Predictor.
class Predictor {
 public:
  explicit Predictor(const ModelCheckpoint& ckpt);

  const ModelCheckpoint& checkpoint() const { return ckpt_; }

  /// CNN probabilities. `second` is required for stacked mixing and ignored
  /// otherwise.
  std::vector<double> probabilities(const std::vector<const Matrix*>& first,
                                    const std::vector<const Matrix*>& second = {});

  /// SNN (or skeleton) embeddings, 16 values each.
  std::vector<std::vector<double>> embeddings(const std::vector<const Matrix*>& inputs);

 private:
  ModelCheckpoint ckpt_;
  Network net_;
};

}  // namespace loopcompat::nn
