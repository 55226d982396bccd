#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace loopcompat::nn {

/// batch x channels x height x width.
struct Shape {
  std::size_t n = 0, c = 0, h = 1, w = 1;

  std::size_t size() const { return n * c * h * w; }
  std::size_t per_sample() const { return c * h * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

struct Tensor4 {
  Shape shape;
  std::vector<double> data;

  Tensor4() = default;
  explicit Tensor4(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}

  std::span<double> sample(std::size_t i) { return {data.data() + i * shape.per_sample(), shape.per_sample()}; }
  std::span<const double> sample(std::size_t i) const {
    return {data.data() + i * shape.per_sample(), shape.per_sample()};
  }
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data[((n * shape.c + c) * shape.h + h) * shape.w + w];
  }
  const double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data[((n * shape.c + c) * shape.h + h) * shape.w + w];
  }
};

/// Trainable parameter (or a persistent buffer when `grad` stays empty).
struct Parameter {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> d, bool trainable = true);

  std::size_t size() const { return value.size(); }
  void zero_grad();
};

}  // namespace loopcompat::nn
