#include "loopcompat/nn/model.hpp"

#include "loopcompat/error.hpp"

namespace loopcompat::nn {

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Cnn ? "cnn" : "snn"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "cnn") return ModelKind::Cnn;
  if (text == "snn") return ModelKind::Snn;
  fail(ErrorKind::InvalidInput, "unknown model kind '" + std::string(text) + "'");
}

namespace {

constexpr std::size_t kConv1 = 16;
constexpr std::size_t kConv2 = 4;
constexpr std::size_t kFc[] = {256, 128, kEmbeddingSize};

}  // namespace

Skeleton::Skeleton(const ArchConfig& arch) : arch_(arch) {
  require(arch.channels > 0 && arch.height >= 4 && arch.width >= 4, ErrorKind::InvalidInput,
          "skeleton input must be at least 4x4");
  Rng init(mix_seed(arch.seed, 0x1417));
  std::uint64_t dropout_stream = 0;
  auto dropout = [&] { return std::make_unique<Dropout>(arch.dropout, mix_seed(arch.seed, ++dropout_stream)); };

  auto conv1 = std::make_unique<Conv2d>("conv1", arch.channels, kConv1);
  conv1->set_input_gradient(false);
  conv1->init_he_uniform(init);
  layers_.push_back(std::move(conv1));
  layers_.push_back(std::make_unique<BatchNorm>("bn1", kConv1));
  layers_.push_back(std::make_unique<PRelu>("prelu1", kConv1));
  layers_.push_back(dropout());
  layers_.push_back(std::make_unique<MaxPool2>());

  auto conv2 = std::make_unique<Conv2d>("conv2", kConv1, kConv2);
  conv2->init_he_uniform(init);
  layers_.push_back(std::move(conv2));
  layers_.push_back(std::make_unique<BatchNorm>("bn2", kConv2));
  layers_.push_back(std::make_unique<PRelu>("prelu2", kConv2));
  layers_.push_back(dropout());
  layers_.push_back(std::make_unique<MaxPool2>());

  flatten_ = kConv2 * (arch.height / 2 / 2) * (arch.width / 2 / 2);
  std::size_t in = flatten_;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string idx = std::to_string(i + 1);
    auto fc = std::make_unique<Linear>("fc" + idx, in, kFc[i]);
    fc->init_he_uniform(init);
    layers_.push_back(std::move(fc));
    layers_.push_back(std::make_unique<BatchNorm>("bn_fc" + idx, kFc[i]));
    layers_.push_back(std::make_unique<PRelu>("prelu_fc" + idx, kFc[i]));
    layers_.push_back(dropout());
    in = kFc[i];
  }
}

Tensor4 Skeleton::forward(const Tensor4& x, Mode mode) {
  const Shape expected{x.shape.n, arch_.channels, arch_.height, arch_.width};
  if (!(x.shape == expected) || x.shape.n == 0) {
    fail(ErrorKind::ShapeError, "skeleton expects " + expected.str() + ", got " + x.shape.str());
  }
  Tensor4 h = layers_.front()->forward(x, mode);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->forward(h, mode);
  return h;
}

Tensor4 Skeleton::backward(const Tensor4& grad_out) {
  Tensor4 g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

std::vector<Parameter*> Skeleton::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (Parameter* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> Skeleton::buffers() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (Parameter* p : layer->buffers()) out.push_back(p);
  }
  return out;
}

void Skeleton::set_dropout_frozen(bool frozen) {
  for (auto& layer : layers_) {
    if (auto* d = dynamic_cast<Dropout*>(layer.get())) d->set_frozen(frozen);
  }
}

Network::Network(ModelKind kind, const ArchConfig& arch) : kind_(kind), skeleton_(arch) {
  if (kind == ModelKind::Cnn) {
    head_ = std::make_unique<Linear>("head", kEmbeddingSize, 1);
    Rng init(mix_seed(arch.seed, 0x4EAD));
    head_->init_he_uniform(init);
  }
}

Tensor4 Network::forward(const Tensor4& x, Mode mode) {
  Tensor4 h = skeleton_.forward(x, mode);
  return head_ ? head_->forward(h, mode) : h;
}

void Network::backward(const Tensor4& grad_out) {
  skeleton_.backward(head_ ? head_->backward(grad_out) : grad_out);
}

std::vector<Parameter*> Network::parameters() {
  auto out = skeleton_.parameters();
  if (head_) {
    for (Parameter* p : head_->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> Network::buffers() { return skeleton_.buffers(); }

std::vector<Parameter*> Network::state() {
  auto out = parameters();
  for (Parameter* p : buffers()) out.push_back(p);
  return out;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

void Network::sgd_step(double learning_rate) {
  for (Parameter* p : parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= learning_rate * p->grad[i];
  }
}

}  // namespace loopcompat::nn
