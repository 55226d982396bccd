#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "loopcompat/nn/tensor.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::nn {

enum class Mode { Train, Eval };

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor4 forward(const Tensor4& x, Mode mode) = 0;
  /// Accumulates parameter gradients and returns dL/dx for the most recent
  /// forward call.
  virtual Tensor4 backward(const Tensor4& grad_out) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  /// Non-trainable state that is saved with the model (running statistics).
  virtual std::vector<Parameter*> buffers() { return {}; }
};

/// 2-D convolution, stride 1, symmetric zero padding.
class Conv2d final : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel = 3,
         std::size_t padding = 1);

  Tensor4 forward(const Tensor4& x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

  /// Skip dL/dx when the layer sits directly on the network input.
  void set_input_gradient(bool enabled) { input_gradient_ = enabled; }
  void init_he_uniform(Rng& rng);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_, kernel_, padding_;
  Parameter weight_, bias_;
  Tensor4 input_;
  bool input_gradient_ = true;
};

/// Fully connected layer over the flattened per-sample input.
class Linear final : public Layer {
 public:
  Linear(std::string name, std::size_t in_features, std::size_t out_features);

  Tensor4 forward(const Tensor4& x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void init_he_uniform(Rng& rng);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter weight_, bias_;
  Tensor4 input_;
};

/// Per-channel batch normalization (statistics over batch and spatial axes).
/// Training uses batch statistics and updates running averages; evaluation
/// uses the running averages.
class BatchNorm final : public Layer {
 public:
  BatchNorm(std::string name, std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  Tensor4 forward(const Tensor4& x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Parameter*> buffers() override { return {&running_mean_, &running_var_}; }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Parameter& running_mean() { return running_mean_; }
  Parameter& running_var() { return running_var_; }

 private:
  std::size_t channels_;
  double momentum_, eps_;
  Parameter gamma_, beta_, running_mean_, running_var_;
  Tensor4 normalized_;
  std::vector<double> inv_std_;
  Mode mode_ = Mode::Eval;
};

/// Parametric ReLU with one slope per channel.
class PRelu final : public Layer {
 public:
  PRelu(std::string name, std::size_t channels, double init = 0.25);

  Tensor4 forward(const Tensor4& x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&slope_}; }

  Parameter& slope() { return slope_; }

 private:
  Parameter slope_;
  Tensor4 input_;
};

/// Inverted dropout; identity in evaluation mode.
class Dropout final : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);

  Tensor4 forward(const Tensor4& x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;

  /// Reuse the previous mask while frozen (gradient checking).
  void set_frozen(bool frozen) { frozen_ = frozen; }
  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<std::uint8_t> keep_;
  bool frozen_ = false;
  Mode mode_ = Mode::Eval;
};

/// 2x2 max pooling, stride 2, trailing odd row/column dropped.
class MaxPool2 final : public Layer {
 public:
  Tensor4 forward(const Tensor4& x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

}  // namespace loopcompat::nn
