#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "affekt/matrix.hpp"

namespace affekt {

/// Multichannel EEG: one row of `data` per channel, amplitudes in microvolts.
struct Recording {
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_names;
  Matrix data;
  std::string subject_id;

  std::size_t n_channels() const { return data.rows(); }
  std::size_t n_samples() const { return data.cols(); }

  /// Throws InvalidRecording when the shape, rate or values are inconsistent.
  void validate() const;
};

enum class FilterKind { LowPass, HighPass, BandPass, BandStop };

struct FilterSpec {
  FilterKind kind = FilterKind::BandStop;
  int order = 4;
  std::vector<double> edges_hz{48.0, 52.0};
  double sample_rate_hz = 512.0;

  void validate() const;

  /// Powerline notch used by the pipeline by default.
  static FilterSpec powerline_notch(double sample_rate_hz, double mains_hz = 50.0, int order = 4);
};

/// Direct-form II transposed biquad. Denominator a0 is normalized to 1.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 2> a{0.0, 0.0};
};

struct FilterRealization {
  std::vector<Biquad> sections;
  double sample_rate_hz = 0.0;

  std::complex<double> response(double freq_hz) const;
  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }

  /// Roots of every section denominator.
  std::vector<std::complex<double>> poles() const;
};

/// Analog low-pass Butterworth magnitude 1/sqrt(1 + w^(2n)) at normalized frequency w.
double analog_butterworth_gain(int order, double w);

/// Analog prototype gain at `freq_hz` for the filter's kind and edges, with the
/// bilinear-transform frequency pre-warping applied to both.
double prewarped_analog_gain(const FilterSpec& spec, double freq_hz);

FilterRealization design_filter(const FilterSpec& spec);

/// Zero-phase (forward-backward) filtering of one series with odd-extension
/// padding and steady-state initial conditions.
std::vector<double> filtfilt(const FilterRealization& filter, std::span<const double> x);

/// Single causal pass with zero initial state.
std::vector<double> filter_causal(const FilterRealization& filter, std::span<const double> x);

Recording apply_filter(const FilterRealization& filter, const Recording& rec);
Matrix apply_filter(const FilterRealization& filter, const Matrix& data);

/// Per-channel standard score with population sigma. Constant channels
/// (sigma < 1e-12) map to zeros.
Recording zscore(const Recording& rec);
Matrix zscore(const Matrix& data);
void zscore_in_place(std::span<double> channel);

}  // namespace affekt
