#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affekt/labels.hpp"
#include "affekt/matrix.hpp"

namespace affekt {

struct PsdSpec {
  std::optional<std::size_t> segment_len;  ///< defaults to round(fs): 1 Hz bins
  double overlap_fraction = 0.5;
  double max_freq_hz = 128.0;

  std::size_t resolved_segment_len(double fs) const;
  void validate(double fs) const;
};

struct Psd {
  std::vector<double> freqs_hz;
  std::vector<double> density;  ///< one-sided, units^2 / Hz
};

/// Welch estimate: Hann-windowed, mean-removed, overlapping segments.
/// Integrating the density over frequency recovers the series variance.
Psd welch_psd(std::span<const double> channel, double fs, const PsdSpec& spec);

struct FeatureMatrix {
  Matrix values;  ///< channels x bins log-power, standardized over the whole matrix
  std::vector<double> bin_freqs_hz;
  ClassLabel label;
  std::string source_window_id;
};

/// Per-channel Welch PSD, bins in (0, max_freq_hz], log(power + 1e-12), then
/// a whole-matrix z-score.
FeatureMatrix build_feature_matrix(const LabeledWindow& window, double fs, const PsdSpec& spec);

// Feature container: "EEGF", u32 version, u32 n_channels, u32 n_bins,
// u32 label_id, then n_channels * n_bins little-endian f32 in row-major order.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

void write_feature_file(const std::filesystem::path& path, const Matrix& values, std::uint32_t label_id);

struct FeatureFile {
  Matrix values;
  std::uint32_t label_id = 0;
};

FeatureFile read_feature_file(const std::filesystem::path& path);

}  // namespace affekt
