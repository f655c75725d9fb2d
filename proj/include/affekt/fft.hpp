#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace affekt {

/// Real-to-complex and complex-to-real FFT of a fixed length, backed by FFTW.
/// Not thread-safe; create one per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t length);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t length() const noexcept { return length_; }

  /// Returns length/2 + 1 unnormalized coefficients.
  std::vector<std::complex<double>> forward(std::span<const double> input);

  /// Unnormalized inverse: forward followed by inverse scales by `length`.
  std::vector<double> inverse(std::span<const std::complex<double>> spectrum);

 private:
  struct Plans;
  std::size_t length_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace affekt
