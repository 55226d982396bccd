#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "loopcompat/nn/layers.hpp"

namespace loopcompat::nn {

enum class ModelKind { Cnn, Snn };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

inline constexpr std::size_t kEmbeddingSize = 16;

struct ArchConfig {
  std::size_t channels = 1;
  std::size_t height = 173;  // frames
  std::size_t width = 128;   // mel bins
  double dropout = 0.1;
  std::uint64_t seed = 0;
};

/// Two conv blocks (16 then 4 filters, 3x3, each followed by batch norm,
/// PReLU, dropout and 2x2 max pooling) and three fully connected blocks
/// (256, 128, 16 units, each with batch norm, PReLU and dropout).
class Skeleton {
 public:
  explicit Skeleton(const ArchConfig& arch);

  /// x must be (n, channels, height, width); returns (n, 16, 1, 1).
  Tensor4 forward(const Tensor4& x, Mode mode);
  Tensor4 backward(const Tensor4& grad_out);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> buffers();
  void set_dropout_frozen(bool frozen);

  const ArchConfig& arch() const { return arch_; }
  std::size_t flatten_size() const { return flatten_; }

 private:
  ArchConfig arch_;
  std::size_t flatten_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Skeleton plus, for the CNN, a single-unit output layer (logit).
class Network {
 public:
  Network(ModelKind kind, const ArchConfig& arch);

  ModelKind kind() const { return kind_; }
  const ArchConfig& arch() const { return skeleton_.arch(); }

  /// CNN: (n, 1, 1, 1) logits. SNN: (n, 16, 1, 1) embeddings.
  Tensor4 forward(const Tensor4& x, Mode mode);
  void backward(const Tensor4& grad_out);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> buffers();
  /// Trainable parameters followed by buffers, in a fixed order.
  std::vector<Parameter*> state();

  void zero_grad();
  void sgd_step(double learning_rate);
  void set_dropout_frozen(bool frozen) { skeleton_.set_dropout_frozen(frozen); }

  Skeleton& skeleton() { return skeleton_; }

 private:
  ModelKind kind_;
  Skeleton skeleton_;
  std::unique_ptr<Linear> head_;
};

}  // namespace loopcompat::nn
