#include "loopcompat/nn/tensor.hpp"

#include <algorithm>

namespace loopcompat::nn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) + ")";
}

Parameter::Parameter(std::string n, std::vector<std::size_t> d, bool trainable) : name(std::move(n)), dims(std::move(d)) {
  std::size_t count = 1;
  for (std::size_t v : dims) count *= v;
  value.assign(count, 0.0);
  if (trainable) grad.assign(count, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

}  // namespace loopcompat::nn
