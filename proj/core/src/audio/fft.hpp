#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace loopcompat::audio::detail {

/// Real-to-complex FFT of length n: writes n/2 + 1 bins.
void rfft(std::span<const double> input, std::span<std::complex<double>> output);

/// Complex-to-real inverse of length n (unnormalized, like FFTW). `input`
/// holds n/2 + 1 bins and is not modified.
void irfft(std::span<const std::complex<double>> input, std::span<double> output);

}  // namespace loopcompat::audio::detail
