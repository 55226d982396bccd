#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "loopcompat/matrix.hpp"
#include "loopcompat/nn/model.hpp"

namespace loopcompat::nn {

/// How the CNN sees a pair: one log-mel of the summed waveforms, or the two
/// loops' log-mels as separate channels.
enum class Mixing { Sum, Stack };

std::string_view to_string(Mixing mixing);
Mixing parse_mixing(std::string_view text);

struct TrainConfig {
  ModelKind kind = ModelKind::Cnn;
  double learning_rate = 0.01;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::string negative_strategy = "random";
  double margin = 1.0;
  Mixing mixing = Mixing::Sum;
  double dropout = 0.1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  /// CNN: validation accuracy at 0.5. SNN: mean negative minus mean positive distance.
  double val_metric = 0.0;
};

/// Per-mel-bin standardization fitted on the training inputs.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return mean.empty(); }
  void apply(Matrix& features) const;
  static Standardizer fit(const std::vector<const Matrix*>& features);
};

struct Blob {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

struct ModelCheckpoint {
  ModelKind kind = ModelKind::Cnn;
  ArchConfig arch;
  TrainConfig train;
  Standardizer standardizer;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initialization
  std::vector<Blob> blobs;

  /// Snapshot of every parameter and buffer of `net`.
  static std::vector<Blob> capture(Network& net);
  /// Copies blobs into `net`, checking names and shapes (ShapeError).
  void restore(Network& net) const;
  Network instantiate() const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: magic "LCKPT\0\0\1", u32 version, u64-length JSON header
/// (kind, architecture, training config, standardizer, history), then for
/// each blob: name, dims and little-endian float64 values.
void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// epoch,train_loss,val_loss,val_metric
void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace loopcompat::nn
