#include "loopcompat/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "loopcompat/error.hpp"

namespace loopcompat::nn {

namespace {
double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }
}  // namespace

double bce_loss(double p, double y) {
  const double q = clamp_probability(p);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double bce_grad(double p, double y) {
  const double q = clamp_probability(p);
  return -y / q + (1.0 - y) / (1.0 - q);
}

double contrastive_loss(double distance, double y, double margin) {
  require(distance >= 0.0, ErrorKind::InvalidInput, "contrastive loss: negative distance");
  const double hinge = std::max(0.0, margin - distance);
  return y * distance * distance + (1.0 - y) * hinge * hinge;
}

double contrastive_grad(double distance, double y, double margin) {
  require(distance >= 0.0, ErrorKind::InvalidInput, "contrastive loss: negative distance");
  const double hinge = std::max(0.0, margin - distance);
  return 2.0 * y * distance - 2.0 * (1.0 - y) * hinge;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::ShapeError, "euclidean distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace loopcompat::nn
