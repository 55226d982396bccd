#include "loopcompat/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loopcompat/error.hpp"
#include "loopcompat/nn/loss.hpp"

namespace loopcompat::nn {
namespace {

struct Prepared {
  std::vector<Matrix> features;
  const std::vector<PairSample>* pairs = nullptr;
};

Prepared standardize(const PairDataset& set, const Standardizer& st) {
  Prepared out{set.features, &set.pairs};
  for (Matrix& m : out.features) st.apply(m);
  return out;
}

void copy_into(Tensor4& x, std::size_t sample, std::size_t channel, const Matrix& m) {
  const std::size_t plane = x.shape.h * x.shape.w;
  require(m.data.size() == plane, ErrorKind::ShapeError, "pair feature has the wrong shape");
  std::copy(m.data.begin(), m.data.end(), x.data.begin() + static_cast<std::ptrdiff_t>((sample * x.shape.c + channel) * plane));
}

/// CNN: one row per pair. SNN: first operands then second operands.
Tensor4 build_batch(const Prepared& set, const std::vector<std::size_t>& idx, const ArchConfig& arch, ModelKind kind,
                    Mixing mixing) {
  const std::size_t b = idx.size();
  const auto& pairs = *set.pairs;
  if (kind == ModelKind::Snn) {
    Tensor4 x(Shape{2 * b, 1, arch.height, arch.width});
    for (std::size_t i = 0; i < b; ++i) {
      copy_into(x, i, 0, set.features.at(pairs[idx[i]].a));
      copy_into(x, b + i, 0, set.features.at(pairs[idx[i]].b));
    }
    return x;
  }
  Tensor4 x(Shape{b, arch.channels, arch.height, arch.width});
  for (std::size_t i = 0; i < b; ++i) {
    copy_into(x, i, 0, set.features.at(pairs[idx[i]].a));
    if (mixing == Mixing::Stack) copy_into(x, i, 1, set.features.at(pairs[idx[i]].b));
  }
  return x;
}

struct BatchResult {
  double loss = 0.0;     // summed over pairs
  double metric = 0.0;   // CNN: correct count; SNN: unused
  double pos_dist = 0.0, neg_dist = 0.0;
  std::size_t pos = 0, neg = 0;
};

/// Computes the loss of one batch and, when `grad` is non-null, dL/d(output)
/// for the mean loss.
BatchResult evaluate_batch(const Tensor4& out, const std::vector<double>& labels, const TrainConfig& cfg,
                           Tensor4* grad) {
  BatchResult r;
  const std::size_t b = labels.size();
  if (grad) *grad = Tensor4(out.shape);
  if (cfg.kind == ModelKind::Cnn) {
    for (std::size_t i = 0; i < b; ++i) {
      const double p = sigmoid(out.data[i]);
      r.loss += bce_loss(p, labels[i]);
      r.metric += ((p >= 0.5) == (labels[i] > 0.5)) ? 1.0 : 0.0;
      // Fused sigmoid + BCE gradient with respect to the logit.
      if (grad) grad->data[i] = (p - labels[i]) / static_cast<double>(b);
    }
    return r;
  }
  const std::size_t e = out.shape.per_sample();
  for (std::size_t i = 0; i < b; ++i) {
    const auto ea = out.sample(i);
    const auto eb = out.sample(b + i);
    const double d = euclidean_distance(ea, eb);
    r.loss += contrastive_loss(d, labels[i], cfg.margin);
    if (labels[i] > 0.5) {
      r.pos_dist += d;
      ++r.pos;
    } else {
      r.neg_dist += d;
      ++r.neg;
    }
    if (grad && d > 0.0) {
      const double g = contrastive_grad(d, labels[i], cfg.margin) / static_cast<double>(b);
      for (std::size_t k = 0; k < e; ++k) {
        const double dk = g * (ea[k] - eb[k]) / d;
        grad->data[i * e + k] = dk;
        grad->data[(b + i) * e + k] = -dk;
      }
    }
  }
  return r;
}

std::vector<double> labels_of(const Prepared& set, const std::vector<std::size_t>& idx) {
  std::vector<double> y;
  y.reserve(idx.size());
  for (std::size_t i : idx) y.push_back((*set.pairs)[i].label);
  return y;
}

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) fail(ErrorKind::TrainingDiverged, "non-finite loss in epoch " + std::to_string(epoch));
}

std::pair<double, double> validate(Network& net, const Prepared& set, const ArchConfig& arch, const TrainConfig& cfg) {
  const std::size_t n = set.pairs->size();
  BatchResult total;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    idx.resize(std::min(cfg.batch_size, n - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor4 out = net.forward(build_batch(set, idx, arch, cfg.kind, cfg.mixing), Mode::Eval);
    const BatchResult r = evaluate_batch(out, labels_of(set, idx), cfg, nullptr);
    total.loss += r.loss;
    total.metric += r.metric;
    total.pos_dist += r.pos_dist;
    total.neg_dist += r.neg_dist;
    total.pos += r.pos;
    total.neg += r.neg;
  }
  const double loss = total.loss / static_cast<double>(n);
  double metric = 0.0;
  if (cfg.kind == ModelKind::Cnn) {
    metric = total.metric / static_cast<double>(n);
  } else {
    const double mp = total.pos ? total.pos_dist / static_cast<double>(total.pos) : 0.0;
    const double mn = total.neg ? total.neg_dist / static_cast<double>(total.neg) : 0.0;
    metric = mn - mp;
  }
  return {loss, metric};
}

void check_dataset(const PairDataset& set, const char* what) {
  require(!set.pairs.empty(), ErrorKind::InsufficientData, std::string(what) + " set has no pairs");
  for (const auto& p : set.pairs) {
    require(p.a < set.features.size() && p.b < set.features.size(), ErrorKind::InvalidInput,
            std::string(what) + " pair refers to a missing feature");
    require(p.label == 0.0 || p.label == 1.0, ErrorKind::InvalidInput, "pair labels must be 0 or 1");
  }
}

}  // namespace

ModelCheckpoint train(const PairDataset& train_set, const PairDataset& val_set, const TrainConfig& config) {
  check_dataset(train_set, "training");
  check_dataset(val_set, "validation");
  require(config.batch_size > 0, ErrorKind::InvalidInput, "batch size must be positive");
  require(config.learning_rate > 0.0 && std::isfinite(config.learning_rate), ErrorKind::InvalidInput,
          "learning rate must be positive");

  const Matrix& first = train_set.features.front();
  ArchConfig arch;
  arch.channels = (config.kind == ModelKind::Cnn && config.mixing == Mixing::Stack) ? 2 : 1;
  arch.height = first.rows;
  arch.width = first.cols;
  arch.dropout = config.dropout;
  arch.seed = config.seed;

  ModelCheckpoint ckpt;
  ckpt.kind = config.kind;
  ckpt.arch = arch;
  ckpt.train = config;
  std::vector<const Matrix*> fit_on;
  for (const Matrix& m : train_set.features) fit_on.push_back(&m);
  ckpt.standardizer = Standardizer::fit(fit_on);

  const Prepared train_data = standardize(train_set, ckpt.standardizer);
  const Prepared val_data = standardize(val_set, ckpt.standardizer);

  Network net(config.kind, arch);
  auto [best_loss, init_metric] = validate(net, val_data, arch, config);
  check_finite(best_loss, 0);
  ckpt.history.push_back(EpochRecord{0, best_loss, best_loss, init_metric});
  ckpt.blobs = ModelCheckpoint::capture(net);

  Rng shuffle(mix_seed(config.seed, 0x5EED));
  std::vector<std::size_t> order(train_set.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> idx;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      // Batch statistics are undefined for a single CNN example.
      if (len < 2 && config.kind == ModelKind::Cnn) continue;
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                 order.begin() + static_cast<std::ptrdiff_t>(start + len));
      const Tensor4 out = net.forward(build_batch(train_data, idx, arch, config.kind, config.mixing), Mode::Train);
      Tensor4 grad;
      const BatchResult r = evaluate_batch(out, labels_of(train_data, idx), config, &grad);
      check_finite(r.loss, epoch);
      net.zero_grad();
      net.backward(grad);
      net.sgd_step(config.learning_rate);
      loss_sum += r.loss;
      seen += len;
    }
    const double train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    const auto [val_loss, val_metric] = validate(net, val_data, arch, config);
    check_finite(val_loss, epoch);
    ckpt.history.push_back(EpochRecord{epoch, train_loss, val_loss, val_metric});
    if (val_loss < best_loss) {
      best_loss = val_loss;
      ckpt.best_epoch = epoch;
      ckpt.blobs = ModelCheckpoint::capture(net);
    }
  }
  return ckpt;
}

Predictor::Predictor(const ModelCheckpoint& ckpt) : ckpt_(ckpt), net_(ckpt.instantiate()) {}

namespace {
constexpr std::size_t kInferenceChunk = 32;
}

std::vector<double> Predictor::probabilities(const std::vector<const Matrix*>& first,
                                             const std::vector<const Matrix*>& second) {
  require(ckpt_.kind == ModelKind::Cnn, ErrorKind::InvalidInput, "probabilities need a CNN checkpoint");
  const bool stack = ckpt_.arch.channels == 2;
  require(!stack || second.size() == first.size(), ErrorKind::ShapeError,
          "stacked CNN needs one second operand per first operand");
  const auto& a = ckpt_.arch;
  std::vector<double> out;
  out.reserve(first.size());
  auto load = [&](Tensor4& x, std::size_t slot, std::size_t channel, const Matrix* src) {
    require(src->rows == a.height && src->cols == a.width, ErrorKind::ShapeError, "CNN input has the wrong shape");
    Matrix m = *src;
    ckpt_.standardizer.apply(m);
    copy_into(x, slot, channel, m);
  };
  for (std::size_t start = 0; start < first.size(); start += kInferenceChunk) {
    const std::size_t len = std::min(kInferenceChunk, first.size() - start);
    Tensor4 x(Shape{len, a.channels, a.height, a.width});
    for (std::size_t i = 0; i < len; ++i) {
      load(x, i, 0, first[start + i]);
      if (stack) load(x, i, 1, second[start + i]);
    }
    const Tensor4 logits = net_.forward(x, Mode::Eval);
    for (double z : logits.data) out.push_back(sigmoid(z));
  }
  return out;
}

std::vector<std::vector<double>> Predictor::embeddings(const std::vector<const Matrix*>& inputs) {
  const auto& a = ckpt_.arch;
  require(a.channels == 1, ErrorKind::InvalidInput, "embeddings need a single-channel model");
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += kInferenceChunk) {
    const std::size_t len = std::min(kInferenceChunk, inputs.size() - start);
    Tensor4 x(Shape{len, 1, a.height, a.width});
    for (std::size_t i = 0; i < len; ++i) {
      const Matrix* src = inputs[start + i];
      require(src->rows == a.height && src->cols == a.width, ErrorKind::ShapeError,
              "embedding input has the wrong shape");
      Matrix m = *src;
      ckpt_.standardizer.apply(m);
      copy_into(x, i, 0, m);
    }
    const Tensor4 emb = net_.skeleton().forward(x, Mode::Eval);
    for (std::size_t i = 0; i < len; ++i) {
      const auto s = emb.sample(i);
      out.emplace_back(s.begin(), s.end());
    }
  }
  return out;
}

}  // namespace loopcompat::nn
