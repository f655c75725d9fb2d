#include "affekt/features.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "affekt/error.hpp"
#include "affekt/fft.hpp"
#include "binary_io.hpp"

namespace affekt {

std::size_t PsdSpec::resolved_segment_len(double fs) const {
  return segment_len ? *segment_len : static_cast<std::size_t>(std::lround(fs));
}

void PsdSpec::validate(double fs) const {
  if (resolved_segment_len(fs) < 8) throw Error(ErrorKind::InvalidParams, "PSD segment length must be >= 8");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidParams, "PSD overlap fraction must lie in [0, 1)");
  }
  if (!(max_freq_hz > 0.0)) throw Error(ErrorKind::InvalidParams, "max_freq_hz must be positive");
  if (max_freq_hz > fs / 2.0) {
    throw Error(ErrorKind::NyquistExceeded, "max_freq_hz " + std::to_string(max_freq_hz) +
                                                " exceeds Nyquist " + std::to_string(fs / 2.0));
  }
}

Psd welch_psd(std::span<const double> channel, double fs, const PsdSpec& spec) {
  const std::size_t len = spec.resolved_segment_len(fs);
  if (len < 8) throw Error(ErrorKind::InvalidParams, "PSD segment length must be >= 8");
  if (channel.size() < len) {
    throw Error(ErrorKind::WindowTooShort, "series of " + std::to_string(channel.size()) +
                                               " samples is shorter than the PSD segment " +
                                               std::to_string(len));
  }
  const auto overlap = static_cast<std::size_t>(std::lround(spec.overlap_fraction * static_cast<double>(len)));
  const std::size_t step = std::max<std::size_t>(1, len - std::min(overlap, len));
  const std::size_t n_segments = (channel.size() - len) / step + 1;

  // Periodic Hann.
  std::vector<double> window(len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
    window_power += window[i] * window[i];
  }

  RealFft fft(len);
  const std::size_t bins = len / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::vector<double> segment(len);
  for (std::size_t s = 0; s < n_segments; ++s) {
    const auto part = channel.subspan(s * step, len);
    double mean = 0.0;
    for (double v : part) mean += v;
    mean /= static_cast<double>(len);
    for (std::size_t i = 0; i < len; ++i) segment[i] = (part[i] - mean) * window[i];
    const auto spectrum = fft.forward(segment);
    for (std::size_t k = 0; k < bins; ++k) acc[k] += std::norm(spectrum[k]);
  }

  Psd out;
  out.freqs_hz.resize(bins);
  out.density.resize(bins);
  const double scale = 1.0 / (fs * window_power * static_cast<double>(n_segments));
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * fs / static_cast<double>(len);
    const bool unpaired = k == 0 || (len % 2 == 0 && k == bins - 1);
    out.density[k] = acc[k] * scale * (unpaired ? 1.0 : 2.0);
  }
  return out;
}

FeatureMatrix build_feature_matrix(const LabeledWindow& window, double fs, const PsdSpec& spec) {
  spec.validate(fs);
  const Matrix& data = window.data;
  if (data.rows() < 1) throw Error(ErrorKind::ShapeMismatch, "feature window has no channels");

  FeatureMatrix fm;
  fm.label = window.label;
  fm.source_window_id = window.window_id;

  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < data.rows(); ++c) {
    const Psd psd = welch_psd(data.row(c), fs, spec);
    if (c == 0) {
      for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
        const double f = psd.freqs_hz[k];
        if (f > 0.0 && f <= spec.max_freq_hz + 1e-9) {
          keep.push_back(k);
          fm.bin_freqs_hz.push_back(f);
        }
      }
      fm.values = Matrix(data.rows(), keep.size());
    }
    for (std::size_t j = 0; j < keep.size(); ++j) fm.values(c, j) = std::log(psd.density[keep[j]] + 1e-12);
  }

  auto& v = fm.values.values();
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sigma = std::sqrt(var / n);
  for (auto& x : v) x = sigma < 1e-12 ? 0.0 : (x - mean) / sigma;
  return fm;
}

void write_feature_file(const std::filesystem::path& path, const Matrix& values, std::uint32_t label_id) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot open " + path.string() + " for writing");
  out.write("EEGF", 4);
  io::put_u32(out, kFeatureFileVersion);
  io::put_u32(out, static_cast<std::uint32_t>(values.rows()));
  io::put_u32(out, static_cast<std::uint32_t>(values.cols()));
  io::put_u32(out, label_id);
  for (double x : values.values()) io::put_f32(out, static_cast<float>(x));
  if (!out) throw Error(ErrorKind::MissingFile, "failed writing " + path.string());
}

FeatureFile read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "feature file not found: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "EEGF") {
    throw Error(ErrorKind::ShapeMismatch, path.string() + ": bad feature file magic");
  }
  std::uint32_t version = 0, rows = 0, cols = 0, label = 0;
  if (!io::get_u32(in, version) || !io::get_u32(in, rows) || !io::get_u32(in, cols) || !io::get_u32(in, label)) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + ": truncated feature header");
  }
  if (version != kFeatureFileVersion) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + ": unsupported feature file version " +
                                              std::to_string(version));
  }
  FeatureFile out;
  out.label_id = label;
  out.values = Matrix(rows, cols);
  for (auto& x : out.values.values()) {
    float f = 0.0f;
    if (!io::get_f32(in, f)) throw Error(ErrorKind::ShapeMismatch, path.string() + ": truncated feature payload");
    x = f;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + ": trailing bytes after feature payload");
  }
  return out;
}

}  // namespace affekt
