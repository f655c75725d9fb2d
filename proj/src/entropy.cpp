#include "affekt/entropy.hpp"

#include <cmath>
#include <random>
#include <string>

#include "affekt/error.hpp"

namespace affekt {

namespace {

double population_sigma(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / n);
}

void require_length(std::span<const double> series, int m) {
  if (series.size() < static_cast<std::size_t>(m) + 2) {
    throw Error(ErrorKind::SeriesTooShort, "sample entropy needs at least m + 2 = " +
                                               std::to_string(m + 2) + " samples, got " +
                                               std::to_string(series.size()));
  }
}

}  // namespace

void EntropyParams::validate() const {
  if (m < 1) throw Error(ErrorKind::InvalidParams, "embedding dimension m must be >= 1");
  if (!(r_factor > 0.0 && r_factor < 1.0)) {
    throw Error(ErrorKind::InvalidParams, "r_factor must lie in (0, 1)");
  }
  if (max_scale < 1) throw Error(ErrorKind::InvalidParams, "max_scale must be >= 1");
}

void NoiseSpec::validate() const {
  if (!(max_magnitude > 0.0)) throw Error(ErrorKind::InvalidParams, "noise max_magnitude must be > 0");
}

MatchCounts count_template_matches(std::span<const double> series, int m, double r) {
  if (m < 1) throw Error(ErrorKind::InvalidParams, "embedding dimension m must be >= 1");
  require_length(series, m);
  const std::size_t n = series.size();
  const std::size_t len = static_cast<std::size_t>(m);
  const std::size_t last_m = n - len;  // last start index of an m-template
  const double* x = series.data();

  MatchCounts counts;
  for (std::size_t i = 0; i < last_m; ++i) {
    for (std::size_t j = i + 1; j <= last_m; ++j) {
      std::size_t k = 0;
      while (k < len && std::abs(x[i + k] - x[j + k]) <= r) ++k;
      if (k < len) continue;
      ++counts.b;
      // The (m+1)-template starting at j exists only while j + m < n.
      if (j < last_m && std::abs(x[i + len] - x[j + len]) <= r) ++counts.a;
    }
  }
  return counts;
}

std::optional<double> sample_entropy_abs(std::span<const double> series, int m, double r) {
  const MatchCounts c = count_template_matches(series, m, r);
  if (c.a == 0 || c.b == 0) return std::nullopt;
  return -std::log(static_cast<double>(c.a) / static_cast<double>(c.b));
}

std::optional<double> sample_entropy(std::span<const double> series, const EntropyParams& params) {
  params.validate();
  require_length(series, params.m);
  return sample_entropy_abs(series, params.m, params.r_factor * population_sigma(series));
}

std::vector<double> coarse_grain(std::span<const double> series, int scale) {
  if (scale < 1) throw Error(ErrorKind::InvalidParams, "coarse-graining scale must be >= 1");
  const std::size_t tau = static_cast<std::size_t>(scale);
  if (series.size() < tau) {
    throw Error(ErrorKind::ScaleTooLarge, "series shorter than scale " + std::to_string(scale));
  }
  const std::size_t out_len = series.size() / tau;
  std::vector<double> out(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < tau; ++k) sum += series[j * tau + k];
    out[j] = sum / static_cast<double>(tau);
  }
  return out;
}

std::vector<int> EntropyProfile::undefined_scales() const {
  std::vector<int> out;
  for (const auto& s : per_scale) {
    if (!s.sampen) out.push_back(s.tau);
  }
  return out;
}

EntropyProfile multiscale_entropy(std::span<const double> series, const EntropyParams& params) {
  params.validate();
  const std::size_t need = static_cast<std::size_t>(params.m) + 2;
  if (series.size() / static_cast<std::size_t>(params.max_scale) < need) {
    throw Error(ErrorKind::SeriesTooShort,
                "series of " + std::to_string(series.size()) + " samples cannot support scale " +
                    std::to_string(params.max_scale) + " with m = " + std::to_string(params.m));
  }
  const double r = params.r_factor * population_sigma(series);

  EntropyProfile profile;
  for (int tau = 1; tau <= params.max_scale; ++tau) {
    const auto grained = coarse_grain(series, tau);
    const auto value = sample_entropy_abs(grained, params.m, r);
    profile.per_scale.push_back({tau, value});
    if (value) profile.complexity_index += *value;
  }
  return profile;
}

Matrix add_gaussian_noise(const Matrix& window, const NoiseSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, spec.max_magnitude / 3.0);
  Matrix out = window;
  for (auto& v : out.values()) {
    double delta = normal(rng);
    while (std::abs(delta) > spec.max_magnitude) delta = normal(rng);
    v += delta;
  }
  return out;
}

std::vector<ChannelComplexity> complexity_shift_report(const Matrix& clean, const Matrix& noisy,
                                                       const EntropyParams& params) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "clean and noisy windows differ in shape");
  }
  std::vector<ChannelComplexity> report;
  report.reserve(clean.rows());
  for (std::size_t c = 0; c < clean.rows(); ++c) {
    ChannelComplexity entry;
    entry.clean = multiscale_entropy(clean.row(c), params);
    entry.noisy = multiscale_entropy(noisy.row(c), params);
    entry.delta = entry.noisy.complexity_index - entry.clean.complexity_index;
    report.push_back(std::move(entry));
  }
  return report;
}

}  // namespace affekt
