#pragma once

#include <cstdint>
#include <string>

#include "loopcompat/matrix.hpp"

namespace loopcompat::dedup {

/// 64-bit average hash. Bit (8 * row + col) is set iff that cell of the 8x8
/// downsampled image is strictly greater than the mean of all 64 cells.
struct SpectrogramHash {
  std::uint64_t bits = 0;

  std::string hex() const;
  static SpectrogramHash from_hex(const std::string& text);

  friend bool operator==(const SpectrogramHash&, const SpectrogramHash&) = default;
};

/// Triangle-filter ("bilinear") resize. For downscaling the filter support
/// widens with the scale factor so every source cell contributes.
Matrix resize_bilinear(const Matrix& image, std::size_t rows, std::size_t cols);

SpectrogramHash average_hash(const Matrix& image);

int hamming_distance(SpectrogramHash a, SpectrogramHash b);

}  // namespace loopcompat::dedup
