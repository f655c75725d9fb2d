#include "affekt/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "affekt/error.hpp"

namespace affekt {

namespace {

using cplx = std::complex<double>;

bool two_edged(FilterKind kind) {
  return kind == FilterKind::BandPass || kind == FilterKind::BandStop;
}

// Analog angular frequency reached by the bilinear transform at `freq_hz`.
double prewarp(double freq_hz, double fs) {
  return 2.0 * fs * std::tan(std::numbers::pi * freq_hz / fs);
}

std::vector<cplx> butterworth_prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(order);
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

struct Zpk {
  std::vector<cplx> zeros;
  std::vector<cplx> poles;
};

Zpk analog_design(const FilterSpec& spec) {
  const double fs = spec.sample_rate_hz;
  const auto proto = butterworth_prototype_poles(spec.order);
  Zpk out;
  switch (spec.kind) {
    case FilterKind::LowPass: {
      const double wc = prewarp(spec.edges_hz[0], fs);
      for (const auto& p : proto) out.poles.push_back(wc * p);
      break;
    }
    case FilterKind::HighPass: {
      const double wc = prewarp(spec.edges_hz[0], fs);
      for (const auto& p : proto) out.poles.push_back(wc / p);
      out.zeros.assign(proto.size(), cplx{0.0, 0.0});
      break;
    }
    case FilterKind::BandPass: {
      const double w1 = prewarp(spec.edges_hz[0], fs);
      const double w2 = prewarp(spec.edges_hz[1], fs);
      const double w0 = std::sqrt(w1 * w2);
      const double bw = w2 - w1;
      for (const auto& p : proto) {
        const cplx half = p * (bw / 2.0);
        const cplx root = std::sqrt(half * half - w0 * w0);
        out.poles.push_back(half + root);
        out.poles.push_back(half - root);
      }
      out.zeros.assign(proto.size(), cplx{0.0, 0.0});
      break;
    }
    case FilterKind::BandStop: {
      const double w1 = prewarp(spec.edges_hz[0], fs);
      const double w2 = prewarp(spec.edges_hz[1], fs);
      const double w0 = std::sqrt(w1 * w2);
      const double bw = w2 - w1;
      for (const auto& p : proto) {
        const cplx half = (bw / 2.0) / p;
        const cplx root = std::sqrt(half * half - w0 * w0);
        out.poles.push_back(half + root);
        out.poles.push_back(half - root);
      }
      for (int k = 0; k < spec.order; ++k) {
        out.zeros.emplace_back(0.0, w0);
        out.zeros.emplace_back(0.0, -w0);
      }
      break;
    }
  }
  return out;
}

Zpk bilinear(const Zpk& analog, double fs) {
  const double fs2 = 2.0 * fs;
  Zpk out;
  for (const auto& z : analog.zeros) out.zeros.push_back((fs2 + z) / (fs2 - z));
  for (const auto& p : analog.poles) out.poles.push_back((fs2 + p) / (fs2 - p));
  // Zeros at analog infinity land on z = -1.
  while (out.zeros.size() < out.poles.size()) out.zeros.emplace_back(-1.0, 0.0);
  return out;
}

// Groups roots into conjugate pairs and real pairs; a lone real root, if
// any, is placed last.
std::vector<std::vector<cplx>> group_roots(const std::vector<cplx>& roots) {
  std::vector<std::vector<cplx>> groups;
  std::vector<double> reals;
  for (const auto& r : roots) {
    const double tol = 1e-10 * std::max(1.0, std::abs(r));
    if (std::abs(r.imag()) <= tol) {
      reals.push_back(r.real());
    } else if (r.imag() > 0.0) {
      groups.push_back({r, std::conj(r)});
    }
  }
  std::sort(reals.begin(), reals.end());
  std::size_t lo = 0;
  std::size_t hi = reals.size();
  while (hi - lo >= 2) {
    groups.push_back({cplx{reals[lo], 0.0}, cplx{reals[hi - 1], 0.0}});
    ++lo;
    --hi;
  }
  if (hi - lo == 1) groups.push_back({cplx{reals[lo], 0.0}});
  return groups;
}

std::array<double, 3> poly_from_roots(const std::vector<cplx>& roots) {
  if (roots.size() == 1) return {1.0, -roots[0].real(), 0.0};
  const cplx sum = roots[0] + roots[1];
  const cplx prod = roots[0] * roots[1];
  return {1.0, -sum.real(), prod.real()};
}

cplx section_response(const Biquad& s, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  const cplx num = s.b[0] + s.b[1] * z1 + s.b[2] * z2;
  const cplx den = 1.0 + s.a[0] * z1 + s.a[1] * z2;
  return num / den;
}

double reference_omega(const FilterSpec& spec) {
  switch (spec.kind) {
    case FilterKind::LowPass:
    case FilterKind::BandStop:
      return 0.0;
    case FilterKind::HighPass:
      return std::numbers::pi;
    case FilterKind::BandPass: {
      const double fs = spec.sample_rate_hz;
      const double w0 = std::sqrt(prewarp(spec.edges_hz[0], fs) * prewarp(spec.edges_hz[1], fs));
      return 2.0 * std::atan(w0 / (2.0 * fs));
    }
  }
  return 0.0;
}

}  // namespace

void Recording::validate() const {
  std::ostringstream why;
  if (!(sample_rate_hz > 0.0)) why << "sample rate must be positive; ";
  if (data.rows() != channel_names.size()) {
    why << "data has " << data.rows() << " rows but " << channel_names.size() << " channel names; ";
  }
  if (data.cols() < 1) why << "recording has no samples; ";
  if (!std::all_of(data.values().begin(), data.values().end(),
                   [](double v) { return std::isfinite(v); })) {
    why << "non-finite amplitude; ";
  }
  const std::string msg = why.str();
  if (!msg.empty()) throw Error(ErrorKind::InvalidRecording, "invalid recording: " + msg);
}

void FilterSpec::validate() const {
  if (order < 1 || order > 12) {
    throw Error(ErrorKind::InvalidOrder, "filter order must be in [1, 12], got " + std::to_string(order));
  }
  const std::size_t want = two_edged(kind) ? 2 : 1;
  if (edges_hz.size() != want) {
    throw Error(ErrorKind::InvalidEdges, "filter needs " + std::to_string(want) + " edge(s)");
  }
  if (want == 2 && !(edges_hz[0] < edges_hz[1])) {
    throw Error(ErrorKind::InvalidEdges, "band edges must satisfy low < high");
  }
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorKind::EdgeOutOfRange, "sample rate must be positive");
  }
  const double nyquist = sample_rate_hz / 2.0;
  for (double e : edges_hz) {
    if (!(e > 0.0 && e < nyquist)) {
      throw Error(ErrorKind::EdgeOutOfRange,
                  "edge " + std::to_string(e) + " Hz outside (0, " + std::to_string(nyquist) + ") Hz");
    }
  }
}

FilterSpec FilterSpec::powerline_notch(double sample_rate_hz, double mains_hz, int order) {
  return FilterSpec{FilterKind::BandStop, order, {mains_hz - 2.0, mains_hz + 2.0}, sample_rate_hz};
}

std::complex<double> FilterRealization::response(double freq_hz) const {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  cplx h{1.0, 0.0};
  for (const auto& s : sections) h *= section_response(s, omega);
  return h;
}

std::vector<std::complex<double>> FilterRealization::poles() const {
  std::vector<cplx> out;
  for (const auto& s : sections) {
    const double a1 = s.a[0];
    const double a2 = s.a[1];
    if (a2 == 0.0) {
      out.emplace_back(-a1, 0.0);
      continue;
    }
    const cplx disc = std::sqrt(cplx{a1 * a1 - 4.0 * a2, 0.0});
    out.push_back((-a1 + disc) / 2.0);
    out.push_back((-a1 - disc) / 2.0);
  }
  return out;
}

double analog_butterworth_gain(int order, double w) {
  return 1.0 / std::sqrt(1.0 + std::pow(w, 2.0 * order));
}

double prewarped_analog_gain(const FilterSpec& spec, double freq_hz) {
  const double fs = spec.sample_rate_hz;
  const double omega = prewarp(freq_hz, fs);
  const int n = spec.order;
  switch (spec.kind) {
    case FilterKind::LowPass:
      return analog_butterworth_gain(n, omega / prewarp(spec.edges_hz[0], fs));
    case FilterKind::HighPass:
      return analog_butterworth_gain(n, prewarp(spec.edges_hz[0], fs) / omega);
    case FilterKind::BandPass:
    case FilterKind::BandStop: {
      const double w1 = prewarp(spec.edges_hz[0], fs);
      const double w2 = prewarp(spec.edges_hz[1], fs);
      const double w0sq = w1 * w2;
      const double bw = w2 - w1;
      const double w = spec.kind == FilterKind::BandPass
                           ? std::abs(omega * omega - w0sq) / (omega * bw)
                           : omega * bw / std::abs(w0sq - omega * omega);
      return analog_butterworth_gain(n, w);
    }
  }
  return 0.0;
}

FilterRealization design_filter(const FilterSpec& spec) {
  spec.validate();
  const Zpk digital = bilinear(analog_design(spec), spec.sample_rate_hz);
  const auto pole_groups = group_roots(digital.poles);
  const auto zero_groups = group_roots(digital.zeros);

  FilterRealization out;
  out.sample_rate_hz = spec.sample_rate_hz;
  const double omega_ref = reference_omega(spec);
  for (std::size_t i = 0; i < pole_groups.size(); ++i) {
    Biquad s;
    const auto den = poly_from_roots(pole_groups[i]);
    s.a = {den[1], den[2]};
    s.b = poly_from_roots(zero_groups[i]);
    // Unit gain per section at the passband reference frequency.
    const double g = std::abs(section_response(s, omega_ref));
    for (auto& c : s.b) c /= g;
    out.sections.push_back(s);
  }
  return out;
}

std::vector<double> filter_causal(const FilterRealization& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : filter.sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (auto& v : y) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[0] * out + z2;
      z2 = s.b[2] * in - s.a[1] * out;
      v = out;
    }
  }
  return y;
}

namespace {

// Cascade pass starting from the steady state reached under a constant
// input equal to x[0].
void filter_steady_start(const FilterRealization& filter, std::vector<double>& y) {
  if (y.empty()) return;
  double scale = y[0];
  for (const auto& s : filter.sections) {
    const double dc = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
    double z1 = (dc - s.b[0]) * scale;
    double z2 = (s.b[2] - s.a[1] * dc) * scale;
    for (auto& v : y) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[0] * out + z2;
      z2 = s.b[2] * in - s.a[1] * out;
      v = out;
    }
    scale *= dc;
  }
}

}  // namespace

std::vector<double> filtfilt(const FilterRealization& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t want_pad = 3 * (2 * filter.sections.size() + 1);
  const std::size_t pad = std::min(want_pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  filter_steady_start(filter, ext);
  std::reverse(ext.begin(), ext.end());
  filter_steady_start(filter, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Matrix apply_filter(const FilterRealization& filter, const Matrix& data) {
  Matrix out(data.rows(), data.cols());
  for (std::size_t c = 0; c < data.rows(); ++c) {
    const auto y = filtfilt(filter, data.row(c));
    std::copy(y.begin(), y.end(), out.row(c).begin());
  }
  return out;
}

Recording apply_filter(const FilterRealization& filter, const Recording& rec) {
  rec.validate();
  Recording out = rec;
  out.data = apply_filter(filter, rec.data);
  return out;
}

void zscore_in_place(std::span<double> channel) {
  if (channel.empty()) return;
  const double n = static_cast<double>(channel.size());
  double mean = 0.0;
  for (double v : channel) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : channel) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / n);
  if (sigma < 1e-12) {
    std::fill(channel.begin(), channel.end(), 0.0);
    return;
  }
  for (auto& v : channel) v = (v - mean) / sigma;
}

Matrix zscore(const Matrix& data) {
  Matrix out = data;
  for (std::size_t c = 0; c < out.rows(); ++c) zscore_in_place(out.row(c));
  return out;
}

Recording zscore(const Recording& rec) {
  rec.validate();
  Recording out = rec;
  out.data = zscore(rec.data);
  return out;
}

}  // namespace affekt
