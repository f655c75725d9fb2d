#include "affekt/fft.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include <fftw3.h>

namespace affekt {

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Plans(std::size_t n) {
    const std::size_t bins = n / 2 + 1;
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(bins);
    if (real == nullptr || spec == nullptr) throw std::bad_alloc();
    const int len = static_cast<int>(n);
    // FFTW_ESTIMATE keeps plan selection deterministic across runs.
    fwd = fftw_plan_dft_r2c_1d(len, real, spec, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(len, spec, real, FFTW_ESTIMATE);
  }

  ~Plans() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(real);
    fftw_free(spec);
  }
};

RealFft::RealFft(std::size_t length) : length_(length) {
  if (length == 0) throw std::invalid_argument("FFT length must be positive");
  plans_ = std::make_unique<Plans>(length);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

std::vector<std::complex<double>> RealFft::forward(std::span<const double> input) {
  if (input.size() != length_) throw std::invalid_argument("FFT input length mismatch");
  std::copy(input.begin(), input.end(), plans_->real);
  fftw_execute(plans_->fwd);
  const std::size_t bins = length_ / 2 + 1;
  std::vector<std::complex<double>> out(bins);
  for (std::size_t k = 0; k < bins; ++k) out[k] = {plans_->spec[k][0], plans_->spec[k][1]};
  return out;
}

std::vector<double> RealFft::inverse(std::span<const std::complex<double>> spectrum) {
  const std::size_t bins = length_ / 2 + 1;
  if (spectrum.size() != bins) throw std::invalid_argument("inverse FFT spectrum length mismatch");
  for (std::size_t k = 0; k < bins; ++k) {
    plans_->spec[k][0] = spectrum[k].real();
    plans_->spec[k][1] = spectrum[k].imag();
  }
  // c2r destroys its input array; it is refilled on every call.
  fftw_execute(plans_->inv);
  return {plans_->real, plans_->real + length_};
}

}  // namespace affekt
