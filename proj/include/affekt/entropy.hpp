#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "affekt/matrix.hpp"

namespace affekt {

struct EntropyParams {
  int m = 2;
  double r_factor = 0.15;  ///< tolerance as a multiple of the series' population sigma
  int max_scale = 10;

  void validate() const;
};

/// Template match counts: `b` over length-m templates, `a` over length-(m+1)
/// templates, pairs i < j, Chebyshev distance <= r.
struct MatchCounts {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  bool operator==(const MatchCounts&) const = default;
};

MatchCounts count_template_matches(std::span<const double> series, int m, double r);

/// -ln(A/B) with an absolute tolerance; nullopt when A or B is zero.
std::optional<double> sample_entropy_abs(std::span<const double> series, int m, double r);

/// Sample entropy with r = r_factor * sigma(series).
std::optional<double> sample_entropy(std::span<const double> series, const EntropyParams& params);

std::vector<double> coarse_grain(std::span<const double> series, int scale);

struct ScaleEntropy {
  int tau = 0;
  std::optional<double> sampen;
};

struct EntropyProfile {
  std::vector<ScaleEntropy> per_scale;
  double complexity_index = 0.0;

  /// Scales whose entropy was undefined and therefore left out of the index.
  std::vector<int> undefined_scales() const;
};

/// Sample entropy of each coarse-grained series for tau = 1..max_scale, with
/// r fixed from the scale-1 series.
EntropyProfile multiscale_entropy(std::span<const double> series, const EntropyParams& params);

struct NoiseSpec {
  double max_magnitude = 4.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adds zero-mean Gaussian noise with sigma = max_magnitude / 3, re-drawing
/// any value whose magnitude exceeds max_magnitude.
Matrix add_gaussian_noise(const Matrix& window, const NoiseSpec& spec);

struct ChannelComplexity {
  EntropyProfile clean;
  EntropyProfile noisy;
  double delta = 0.0;  ///< noisy CI minus clean CI
};

std::vector<ChannelComplexity> complexity_shift_report(const Matrix& clean, const Matrix& noisy,
                                                       const EntropyParams& params);

}  // namespace affekt
