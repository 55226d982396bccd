#include "loopcompat/dedup/average_hash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "loopcompat/error.hpp"

namespace loopcompat::dedup {
namespace {

// Weights of a 1-D triangle resampling from n to m samples (pixel centres).
std::vector<std::vector<std::pair<std::size_t, double>>> triangle_weights(std::size_t n, std::size_t m) {
  const double scale = static_cast<double>(n) / static_cast<double>(m);
  const double support = std::max(1.0, scale);
  std::vector<std::vector<std::pair<std::size_t, double>>> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double centre = (static_cast<double>(i) + 0.5) * scale;
    const auto lo = static_cast<std::ptrdiff_t>(std::floor(centre - support));
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil(centre + support));
    double total = 0.0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, lo); j < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), hi); ++j) {
      const double d = std::abs(static_cast<double>(j) + 0.5 - centre) / support;
      const double w = 1.0 - d;
      if (w <= 0.0) continue;
      out[i].emplace_back(static_cast<std::size_t>(j), w);
      total += w;
    }
    for (auto& [j, w] : out[i]) w /= total;
  }
  return out;
}

}  // namespace

std::string SpectrogramHash::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

SpectrogramHash SpectrogramHash::from_hex(const std::string& text) {
  require(text.size() == 16, ErrorKind::InvalidInput, "hash must be 16 hex digits");
  SpectrogramHash h;
  std::size_t used = 0;
  h.bits = std::stoull(text, &used, 16);
  require(used == 16, ErrorKind::InvalidInput, "hash must be 16 hex digits");
  return h;
}

Matrix resize_bilinear(const Matrix& image, std::size_t rows, std::size_t cols) {
  require(!image.empty(), ErrorKind::InvalidInput, "cannot resize an empty matrix");
  const auto wr = triangle_weights(image.rows, rows);
  const auto wc = triangle_weights(image.cols, cols);

  Matrix tmp(image.rows, cols);
  for (std::size_t r = 0; r < image.rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (auto [j, w] : wc[c]) acc += w * image(r, j);
      tmp(r, c) = acc;
    }
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (auto [j, w] : wr[r]) acc += w * tmp(j, c);
      out(r, c) = acc;
    }
  }
  return out;
}

SpectrogramHash average_hash(const Matrix& image) {
  require(!image.empty(), ErrorKind::InvalidInput, "average hash of an empty matrix");
  const Matrix small = resize_bilinear(image, 8, 8);
  double mean = 0.0;
  for (double v : small.data) mean += v;
  mean /= 64.0;
  // Rounding noise from the resize must not set bits on flat regions.
  double scale = 0.0;
  for (double v : small.data) scale = std::max(scale, std::abs(v));
  const double cut = mean + 1e-12 * scale;
  SpectrogramHash h;
  for (std::size_t i = 0; i < 64; ++i) {
    if (small.data[i] > cut) h.bits |= std::uint64_t{1} << i;
  }
  return h;
}

int hamming_distance(SpectrogramHash a, SpectrogramHash b) { return std::popcount(a.bits ^ b.bits); }

}  // namespace loopcompat::dedup
