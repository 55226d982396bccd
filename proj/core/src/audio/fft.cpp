#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace loopcompat::audio::detail {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
struct PlanCache {
  std::mutex mutex;
  std::map<std::size_t, fftw_plan> forward;
  std::map<std::size_t, fftw_plan> inverse;

  ~PlanCache() {
    for (auto& [n, p] : forward) fftw_destroy_plan(p);
    for (auto& [n, p] : inverse) fftw_destroy_plan(p);
  }

  fftw_plan get(std::size_t n, bool is_forward) {
    std::lock_guard lock(mutex);
    auto& cache = is_forward ? forward : inverse;
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    std::vector<double> real(n);
    std::vector<fftw_complex> cplx(n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int size = static_cast<int>(n);
    fftw_plan plan = is_forward ? fftw_plan_dft_r2c_1d(size, real.data(), cplx.data(), flags)
                                : fftw_plan_dft_c2r_1d(size, cplx.data(), real.data(), flags);
    cache.emplace(n, plan);
    return plan;
  }
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void rfft(std::span<const double> input, std::span<std::complex<double>> output) {
  const std::size_t n = input.size();
  fftw_plan plan = plans().get(n, true);
  // r2c does not modify its input, but the FFTW signature is non-const.
  fftw_execute_dft_r2c(plan, const_cast<double*>(input.data()),
                       reinterpret_cast<fftw_complex*>(output.data()));
}

void irfft(std::span<const std::complex<double>> input, std::span<double> output) {
  const std::size_t n = output.size();
  fftw_plan plan = plans().get(n, false);
  // c2r destroys its input; work on a copy.
  std::vector<std::complex<double>> scratch(input.begin(), input.end());
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(scratch.data()), output.data());
}

}  // namespace loopcompat::audio::detail
