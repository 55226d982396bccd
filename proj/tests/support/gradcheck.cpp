#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "loopcompat/nn/loss.hpp"
#include "loopcompat/random.hpp"

namespace loopcompat::testing {

namespace {

std::vector<std::size_t> sample_coords(std::size_t size, std::size_t coords, Rng& rng) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(std::min(size, coords));
  return idx;
}

struct Difference {
  double central = 0.0;
  bool kink = false;
};

double central(double& value, double h, const std::function<double()>& loss) {
  const double saved = value;
  value = saved + h;
  const double up = loss();
  value = saved - h;
  const double down = loss();
  value = saved;
  return (up - down) / (2.0 * h);
}

// On a smooth stretch the central differences at h and h/2 agree to O(h^2);
// a kink inside the stencil makes them differ at first order.
Difference central_difference(double& value, double eps, const std::function<double()>& loss) {
  const double full = central(value, eps, loss);
  const double half = central(value, eps / 2.0, loss);
  const double scale = std::max({std::abs(full), std::abs(half), 1e-5});
  return {full, std::abs(full - half) > 1e-5 * scale};
}

GradCheck compare(const std::string& what, std::vector<double>& values, const std::vector<double>& grads,
                  std::size_t coords, double eps, Rng& rng, const std::function<double()>& loss) {
  GradCheck c{what, 0.0, 0, 0};
  std::vector<double> analytic, numeric;
  for (std::size_t i : sample_coords(values.size(), coords, rng)) {
    const Difference d = central_difference(values[i], eps, loss);
    if (d.kink) {
      ++c.skipped;
      continue;
    }
    analytic.push_back(grads[i]);
    numeric.push_back(d.central);
  }
  c.rel_error = relative_error(analytic, numeric);
  c.coords = analytic.size();
  return c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn_ += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn_));
  // Below this both sides are rounding noise (e.g. biases feeding batch norm).
  constexpr double kNoise = 1e-5;
  return std::sqrt(diff) / std::max(denom, kNoise);
}

double skipped_fraction(const std::vector<GradCheck>& checks) {
  double total = 0.0, skipped = 0.0;
  for (const auto& c : checks) {
    total += static_cast<double>(c.coords + c.skipped);
    skipped += static_cast<double>(c.skipped);
  }
  return total > 0.0 ? skipped / total : 0.0;
}

double max_error(const std::vector<GradCheck>& checks) {
  double m = 0.0;
  for (const auto& c : checks) m = std::max(m, c.rel_error);
  return m;
}

std::vector<GradCheck> check_layer(nn::Layer& layer, const nn::Shape& input, nn::Mode mode, std::uint64_t seed,
                                   double eps, std::size_t coords) {
  Rng rng(seed);
  nn::Tensor4 x(input);
  for (double& v : x.data) v = rng.normal();

  const nn::Tensor4 y0 = layer.forward(x, mode);
  if (auto* drop = dynamic_cast<nn::Dropout*>(&layer)) drop->set_frozen(true);
  std::vector<double> w(y0.data.size());
  for (double& v : w) v = rng.normal();

  auto loss = [&] { return dot(w, layer.forward(x, mode).data); };

  for (auto* p : layer.parameters()) p->zero_grad();
  layer.forward(x, mode);
  nn::Tensor4 g(y0.shape);
  g.data = w;
  const nn::Tensor4 dx = layer.backward(g);

  std::vector<GradCheck> out;
  out.push_back(compare("input", x.data, dx.data, coords, eps, rng, loss));
  for (auto* p : layer.parameters()) {
    const std::vector<double> grads = p->grad;
    out.push_back(compare(p->name, p->value, grads, coords, eps, rng, loss));
  }
  return out;
}

std::vector<GradCheck> check_network(nn::Network& net, std::size_t pairs, std::uint64_t seed, double eps,
                                     std::size_t coords) {
  Rng rng(seed);
  const auto& arch = net.arch();
  const bool siamese = net.kind() == nn::ModelKind::Snn;
  const std::size_t n = siamese ? 2 * pairs : pairs;
  nn::Tensor4 x(nn::Shape{n, arch.channels, arch.height, arch.width});
  for (double& v : x.data) v = rng.normal();
  std::vector<double> labels(pairs);
  for (std::size_t i = 0; i < pairs; ++i) labels[i] = static_cast<double>(i % 2);

  auto loss_and_grad = [&](nn::Tensor4* grad) {
    const nn::Tensor4 out = net.forward(x, nn::Mode::Train);
    if (grad) *grad = nn::Tensor4(out.shape);
    double total = 0.0;
    const auto count = static_cast<double>(pairs);
    if (!siamese) {
      for (std::size_t i = 0; i < pairs; ++i) {
        const double p = nn::sigmoid(out.data[i]);
        total += nn::bce_loss(p, labels[i]);
        if (grad) grad->data[i] = nn::bce_grad(p, labels[i]) * p * (1.0 - p) / count;
      }
      return total / count;
    }
    const std::size_t e = out.shape.per_sample();
    for (std::size_t i = 0; i < pairs; ++i) {
      const auto a = out.sample(i);
      const auto b = out.sample(pairs + i);
      const double d = nn::euclidean_distance(a, b);
      total += nn::contrastive_loss(d, labels[i]);
      if (grad && d > 0.0) {
        const double g = nn::contrastive_grad(d, labels[i]) / count;
        for (std::size_t k = 0; k < e; ++k) {
          grad->data[i * e + k] = g * (a[k] - b[k]) / d;
          grad->data[(pairs + i) * e + k] = -g * (a[k] - b[k]) / d;
        }
      }
    }
    return total / count;
  };

  net.forward(x, nn::Mode::Train);
  net.set_dropout_frozen(true);
  net.zero_grad();
  nn::Tensor4 grad;
  loss_and_grad(&grad);
  net.backward(grad);

  auto loss = [&] { return loss_and_grad(nullptr); };
  std::vector<GradCheck> out;
  for (auto* p : net.parameters()) {
    const std::vector<double> grads = p->grad;
    out.push_back(compare(p->name, p->value, grads, coords, eps, rng, loss));
  }
  net.set_dropout_frozen(false);
  return out;
}

}  // namespace loopcompat::testing
