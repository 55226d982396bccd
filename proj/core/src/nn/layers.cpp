#include "loopcompat/nn/layers.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "loopcompat/error.hpp"

namespace loopcompat::nn {
namespace {

void he_uniform(Parameter& p, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : p.value) v = rng.uniform(-bound, bound);
}

void im2col(const double* image, std::size_t channels, std::size_t h, std::size_t w, std::size_t k, std::size_t pad,
            double* cols) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* row = cols + ((c * k + ki) * k + kj) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ki) - static_cast<std::ptrdiff_t>(pad);
          double* dst = row + y * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill_n(dst, w, 0.0);
            continue;
          }
          const double* src = image + (c * h + static_cast<std::size_t>(sy)) * w;
          const auto shift = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(pad);
          for (std::size_t x = 0; x < w; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x) + shift;
            dst[x] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) ? 0.0 : src[sx];
          }
        }
      }
    }
  }
}

void col2im(const double* cols, std::size_t channels, std::size_t h, std::size_t w, std::size_t k, std::size_t pad,
            double* image) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* row = cols + ((c * k + ki) * k + kj) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ki) - static_cast<std::ptrdiff_t>(pad);
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* dst = image + (c * h + static_cast<std::size_t>(sy)) * w;
          const double* src = row + y * w;
          const auto shift = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(pad);
          for (std::size_t x = 0; x < w; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x) + shift;
            if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(w)) dst[sx] += src[x];
          }
        }
      }
    }
  }
}

void check_channels(const Tensor4& x, std::size_t channels, const char* layer) {
  if (x.shape.c != channels) {
    fail(ErrorKind::ShapeError, std::string(layer) + ": expected " + std::to_string(channels) + " channels, got " +
                                    x.shape.str());
  }
}

void check_same(const Shape& a, const Shape& b, const char* layer) {
  if (!(a == b)) fail(ErrorKind::ShapeError, std::string(layer) + ": gradient shape " + b.str() + " != " + a.str());
}

}  // namespace

// --- Conv2d -----------------------------------------------------------------

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t padding)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      padding_(padding),
      weight_(name + ".weight", {out_channels, in_channels, kernel, kernel}),
      bias_(name + ".bias", {out_channels}) {
  require(2 * padding + 1 == kernel, ErrorKind::InvalidInput, "only shape-preserving convolutions are supported");
}

void Conv2d::init_he_uniform(Rng& rng) {
  he_uniform(weight_, in_ * kernel_ * kernel_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor4 Conv2d::forward(const Tensor4& x, Mode) {
  check_channels(x, in_, "conv2d");
  input_ = x;
  const auto [n, c, h, w] = x.shape;
  const std::size_t hw = h * w;
  const std::size_t k = in_ * kernel_ * kernel_;
  Tensor4 y(Shape{n, out_, h, w});
  std::vector<double> cols(k * hw);
  for (std::size_t s = 0; s < n; ++s) {
    im2col(x.sample(s).data(), in_, h, w, kernel_, padding_, cols.data());
    double* ys = y.sample(s).data();
    for (std::size_t o = 0; o < out_; ++o) std::fill_n(ys + o * hw, hw, bias_.value[o]);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(out_), static_cast<int>(hw),
                static_cast<int>(k), 1.0, weight_.value.data(), static_cast<int>(k), cols.data(), static_cast<int>(hw),
                1.0, ys, static_cast<int>(hw));
  }
  return y;
}

Tensor4 Conv2d::backward(const Tensor4& grad_out) {
  const auto [n, c, h, w] = input_.shape;
  check_same(Shape{n, out_, h, w}, grad_out.shape, "conv2d");
  const std::size_t hw = h * w;
  const std::size_t k = in_ * kernel_ * kernel_;
  Tensor4 dx;
  if (input_gradient_) dx = Tensor4(input_.shape);
  std::vector<double> cols(k * hw);
  std::vector<double> dcols(input_gradient_ ? k * hw : 0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* dy = grad_out.sample(s).data();
    im2col(input_.sample(s).data(), in_, h, w, kernel_, padding_, cols.data());
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(out_), static_cast<int>(k),
                static_cast<int>(hw), 1.0, dy, static_cast<int>(hw), cols.data(), static_cast<int>(hw), 1.0,
                weight_.grad.data(), static_cast<int>(k));
    for (std::size_t o = 0; o < out_; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += dy[o * hw + i];
      bias_.grad[o] += acc;
    }
    if (input_gradient_) {
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(k), static_cast<int>(hw),
                  static_cast<int>(out_), 1.0, weight_.value.data(), static_cast<int>(k), dy, static_cast<int>(hw), 0.0,
                  dcols.data(), static_cast<int>(hw));
      col2im(dcols.data(), in_, h, w, kernel_, padding_, dx.sample(s).data());
    }
  }
  return dx;
}

// --- Linear -----------------------------------------------------------------

Linear::Linear(std::string name, std::size_t in_features, std::size_t out_features)
    : in_(in_features),
      out_(out_features),
      weight_(name + ".weight", {out_features, in_features}),
      bias_(name + ".bias", {out_features}) {}

void Linear::init_he_uniform(Rng& rng) {
  he_uniform(weight_, in_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor4 Linear::forward(const Tensor4& x, Mode) {
  if (x.shape.per_sample() != in_) {
    fail(ErrorKind::ShapeError, "linear: expected " + std::to_string(in_) + " features, got " + x.shape.str());
  }
  input_ = x;
  const std::size_t n = x.shape.n;
  Tensor4 y(Shape{n, out_, 1, 1});
  for (std::size_t s = 0; s < n; ++s) std::copy(bias_.value.begin(), bias_.value.end(), y.sample(s).begin());
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(n), static_cast<int>(out_),
              static_cast<int>(in_), 1.0, x.data.data(), static_cast<int>(in_), weight_.value.data(),
              static_cast<int>(in_), 1.0, y.data.data(), static_cast<int>(out_));
  return y;
}

Tensor4 Linear::backward(const Tensor4& grad_out) {
  const std::size_t n = input_.shape.n;
  check_same(Shape{n, out_, 1, 1}, grad_out.shape, "linear");
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(out_), static_cast<int>(in_),
              static_cast<int>(n), 1.0, grad_out.data.data(), static_cast<int>(out_), input_.data.data(),
              static_cast<int>(in_), 1.0, weight_.grad.data(), static_cast<int>(in_));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += grad_out.data[s * out_ + o];
  }
  Tensor4 dx(input_.shape);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(n), static_cast<int>(in_),
              static_cast<int>(out_), 1.0, grad_out.data.data(), static_cast<int>(out_), weight_.value.data(),
              static_cast<int>(in_), 0.0, dx.data.data(), static_cast<int>(in_));
  return dx;
}

// --- BatchNorm --------------------------------------------------------------

BatchNorm::BatchNorm(std::string name, std::size_t channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name + ".gamma", {channels}),
      beta_(name + ".beta", {channels}),
      running_mean_(name + ".running_mean", {channels}, false),
      running_var_(name + ".running_var", {channels}, false) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
  std::fill(running_var_.value.begin(), running_var_.value.end(), 1.0);
}

Tensor4 BatchNorm::forward(const Tensor4& x, Mode mode) {
  check_channels(x, channels_, "batchnorm");
  mode_ = mode;
  const auto [n, c, h, w] = x.shape;
  const std::size_t hw = h * w;
  const std::size_t count = n * hw;
  if (mode == Mode::Train) {
    require(count > 1, ErrorKind::ShapeError, "batchnorm: training needs more than one value per channel");
  }

  normalized_ = Tensor4(x.shape);
  inv_std_.assign(c, 0.0);
  Tensor4 y(x.shape);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::Train) {
      for (std::size_t s = 0; s < n; ++s) {
        const double* p = &x.at(s, ch, 0, 0);
        for (std::size_t i = 0; i < hw; ++i) mean += p[i];
      }
      mean /= static_cast<double>(count);
      for (std::size_t s = 0; s < n; ++s) {
        const double* p = &x.at(s, ch, 0, 0);
        for (std::size_t i = 0; i < hw; ++i) var += (p[i] - mean) * (p[i] - mean);
      }
      var /= static_cast<double>(count);
      const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
      running_mean_.value[ch] = (1.0 - momentum_) * running_mean_.value[ch] + momentum_ * mean;
      running_var_.value[ch] = (1.0 - momentum_) * running_var_.value[ch] + momentum_ * unbiased;
    } else {
      mean = running_mean_.value[ch];
      var = running_var_.value[ch];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[ch] = inv;
    const double g = gamma_.value[ch], b = beta_.value[ch];
    for (std::size_t s = 0; s < n; ++s) {
      const double* p = &x.at(s, ch, 0, 0);
      double* z = &normalized_.at(s, ch, 0, 0);
      double* q = &y.at(s, ch, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) {
        z[i] = (p[i] - mean) * inv;
        q[i] = g * z[i] + b;
      }
    }
  }
  return y;
}

Tensor4 BatchNorm::backward(const Tensor4& grad_out) {
  check_same(normalized_.shape, grad_out.shape, "batchnorm");
  const auto [n, c, h, w] = grad_out.shape;
  const std::size_t hw = h * w;
  const auto count = static_cast<double>(n * hw);
  Tensor4 dx(grad_out.shape);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_z = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double* dy = &grad_out.at(s, ch, 0, 0);
      const double* z = &normalized_.at(s, ch, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += dy[i];
        sum_dy_z += dy[i] * z[i];
      }
    }
    beta_.grad[ch] += sum_dy;
    gamma_.grad[ch] += sum_dy_z;
    const double g = gamma_.value[ch] * inv_std_[ch];
    for (std::size_t s = 0; s < n; ++s) {
      const double* dy = &grad_out.at(s, ch, 0, 0);
      const double* z = &normalized_.at(s, ch, 0, 0);
      double* out = &dx.at(s, ch, 0, 0);
      if (mode_ == Mode::Train) {
        for (std::size_t i = 0; i < hw; ++i) out[i] = g * (dy[i] - sum_dy / count - z[i] * sum_dy_z / count);
      } else {
        for (std::size_t i = 0; i < hw; ++i) out[i] = g * dy[i];
      }
    }
  }
  return dx;
}

// --- PRelu ------------------------------------------------------------------

PRelu::PRelu(std::string name, std::size_t channels, double init) : slope_(name + ".slope", {channels}) {
  std::fill(slope_.value.begin(), slope_.value.end(), init);
}

Tensor4 PRelu::forward(const Tensor4& x, Mode) {
  check_channels(x, slope_.size(), "prelu");
  input_ = x;
  Tensor4 y(x.shape);
  const std::size_t hw = x.shape.h * x.shape.w;
  for (std::size_t s = 0; s < x.shape.n; ++s) {
    for (std::size_t ch = 0; ch < x.shape.c; ++ch) {
      const double a = slope_.value[ch];
      const double* p = &x.at(s, ch, 0, 0);
      double* q = &y.at(s, ch, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) q[i] = p[i] > 0.0 ? p[i] : a * p[i];
    }
  }
  return y;
}

Tensor4 PRelu::backward(const Tensor4& grad_out) {
  check_same(input_.shape, grad_out.shape, "prelu");
  Tensor4 dx(grad_out.shape);
  const std::size_t hw = grad_out.shape.h * grad_out.shape.w;
  for (std::size_t s = 0; s < grad_out.shape.n; ++s) {
    for (std::size_t ch = 0; ch < grad_out.shape.c; ++ch) {
      const double a = slope_.value[ch];
      const double* p = &input_.at(s, ch, 0, 0);
      const double* dy = &grad_out.at(s, ch, 0, 0);
      double* out = &dx.at(s, ch, 0, 0);
      double da = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        if (p[i] > 0.0) {
          out[i] = dy[i];
        } else {
          out[i] = a * dy[i];
          da += dy[i] * p[i];
        }
      }
      slope_.grad[ch] += da;
    }
  }
  return dx;
}

// --- Dropout ----------------------------------------------------------------

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  require(rate >= 0.0 && rate < 1.0, ErrorKind::InvalidInput, "dropout rate must be in [0, 1)");
}

Tensor4 Dropout::forward(const Tensor4& x, Mode mode) {
  mode_ = mode;
  if (mode == Mode::Eval || rate_ == 0.0) {
    keep_.assign(x.data.size(), 1);
    return x;
  }
  if (!frozen_ || keep_.size() != x.data.size()) {
    keep_.resize(x.data.size());
    for (auto& k : keep_) k = rng_.uniform() < rate_ ? 0 : 1;
  }
  const double scale = 1.0 / (1.0 - rate_);
  Tensor4 y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = keep_[i] ? x.data[i] * scale : 0.0;
  return y;
}

Tensor4 Dropout::backward(const Tensor4& grad_out) {
  require(grad_out.data.size() == keep_.size(), ErrorKind::ShapeError, "dropout: gradient size mismatch");
  const double scale = (mode_ == Mode::Eval || rate_ == 0.0) ? 1.0 : 1.0 / (1.0 - rate_);
  Tensor4 dx(grad_out.shape);
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = keep_[i] ? grad_out.data[i] * scale : 0.0;
  return dx;
}

// --- MaxPool2 ---------------------------------------------------------------

Tensor4 MaxPool2::forward(const Tensor4& x, Mode) {
  const auto [n, c, h, w] = x.shape;
  require(h >= 2 && w >= 2, ErrorKind::ShapeError, "maxpool: input smaller than the 2x2 window " + x.shape.str());
  input_shape_ = x.shape;
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor4 y(Shape{n, c, oh, ow});
  argmax_.assign(y.data.size(), 0);
  std::size_t o = 0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (s * c + ch) * h * w;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j, ++o) {
          std::size_t best = base + (2 * i) * w + 2 * j;
          for (std::size_t di = 0; di < 2; ++di) {
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t idx = base + (2 * i + di) * w + 2 * j + dj;
              if (x.data[idx] > x.data[best]) best = idx;
            }
          }
          y.data[o] = x.data[best];
          argmax_[o] = best;
        }
      }
    }
  }
  return y;
}

Tensor4 MaxPool2::backward(const Tensor4& grad_out) {
  require(grad_out.data.size() == argmax_.size(), ErrorKind::ShapeError, "maxpool: gradient size mismatch");
  Tensor4 dx(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx.data[argmax_[o]] += grad_out.data[o];
  return dx;
}

}  // namespace loopcompat::nn
