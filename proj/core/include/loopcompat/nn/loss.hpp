#pragma once

#include <span>

namespace loopcompat::nn {

inline constexpr double kProbabilityClamp = 1e-7;

/// -[y log p + (1 - y) log(1 - p)] with p clamped to [1e-7, 1 - 1e-7].
double bce_loss(double p, double y);
/// dL/dp at the clamped probability.
double bce_grad(double p, double y);

/// y d^2 + (1 - y) max(0, margin - d)^2 for y = 1 (positive) or 0.
/// Throws InvalidInput for d < 0.
double contrastive_loss(double distance, double y, double margin = 1.0);
/// dL/dd.
double contrastive_grad(double distance, double y, double margin = 1.0);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

double sigmoid(double z);

}  // namespace loopcompat::nn
