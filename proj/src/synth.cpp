#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "affekt/dataset.hpp"
#include "affekt/error.hpp"
#include "affekt/fft.hpp"
#include "affekt/seed.hpp"

namespace affekt {

std::vector<EmotionClassSpec> SynthSpec::default_classes() {
  // Positive emotions oscillate in 15-40 Hz, negative ones in 4-12 Hz.
  return {
      {"joy", BinaryLabel::Positive, 20.0, 0.25},
      {"excitement", BinaryLabel::Positive, 30.0, 0.15},
      {"sadness", BinaryLabel::Negative, 6.0, 0.25},
      {"fear", BinaryLabel::Negative, 10.0, 0.15},
      {"calm", std::nullopt, 0.0, 0.20},
  };
}

std::vector<std::string> default_channel_names(int channels) {
  if (channels == 4) return {"TP9", "TP10", "AF7", "AF8"};
  std::vector<std::string> names;
  for (int c = 1; c <= channels; ++c) names.push_back("E" + std::to_string(c));
  return names;
}

namespace {

// Background with a 1/f^exponent power spectrum, scaled to the requested RMS.
std::vector<double> aperiodic_noise(std::size_t n, double rms, double exponent, std::mt19937_64& rng, RealFft& fft) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> spectrum(n / 2 + 1);
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double amp = std::pow(static_cast<double>(k), -0.5 * exponent);
    const double re = normal(rng);
    const double im = normal(rng);
    spectrum[k] = {amp * re, (n % 2 == 0 && k == n / 2) ? 0.0 : amp * im};
  }
  auto x = fft.inverse(spectrum);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double scale = var > 0.0 ? rms / std::sqrt(var / static_cast<double>(n)) : 0.0;
  for (auto& v : x) v = (v - mean) * scale;
  return x;
}

}  // namespace

RecordingWithEvents synth_subject(const SynthSpec& spec, int subject_index) {
  if (spec.channels < 1) throw Error(ErrorKind::InvalidParams, "synthetic data needs at least one channel");
  if (spec.classes.empty()) throw Error(ErrorKind::InvalidParams, "synthetic data needs at least one class");
  const double fs = spec.sample_rate_hz;
  std::mt19937_64 rng(mix_seed(spec.seed ^ static_cast<std::uint64_t>(subject_index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  char sid[32];
  std::snprintf(sid, sizeof(sid), "sub-%02d", subject_index + 1);

  RecordingWithEvents out;
  Recording& rec = out.recording;
  rec.subject_id = sid;
  rec.sample_rate_hz = fs;
  rec.channel_names = default_channel_names(spec.channels);
  const auto n_samples = static_cast<std::size_t>(
      std::llround((spec.lead_in_s + spec.n_events_per_subject * spec.event_spacing_s) * fs));
  const auto channels = static_cast<std::size_t>(spec.channels);
  rec.data = Matrix(channels, n_samples);

  RealFft fft(n_samples);
  std::vector<double> gains(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto bg = aperiodic_noise(n_samples, spec.background_uv, spec.background_exponent, rng, fft);
    std::copy(bg.begin(), bg.end(), rec.data.row(c).begin());
    gains[c] = uniform(0.6, 1.4);
  }
  const double mains_phase = uniform(0.0, 2.0 * std::numbers::pi);
  for (std::size_t c = 0; c < channels; ++c) {
    auto row = rec.data.row(c);
    for (std::size_t t = 0; t < n_samples; ++t) {
      row[t] += spec.powerline_uv *
                std::sin(2.0 * std::numbers::pi * spec.powerline_hz * static_cast<double>(t) / fs + mains_phase);
    }
  }

  std::vector<double> weights;
  for (const auto& cls : spec.classes) weights.push_back(cls.weight);
  std::discrete_distribution<std::size_t> pick_class(weights.begin(), weights.end());

  const auto event_len = static_cast<std::size_t>(std::llround(spec.event_duration_s * fs));
  for (int e = 0; e < spec.n_events_per_subject; ++e) {
    const auto& cls = spec.classes[pick_class(rng)];
    EmotionEvent ev;
    ev.onset_s = spec.lead_in_s + e * spec.event_spacing_s;
    ev.duration_s = spec.event_duration_s;
    ev.trial_type = "stimulus";
    ev.emotion_name = cls.name;
    auto rating = [&]() {
      if (!cls.binary) return uniform(4.2, 5.8);
      return *cls.binary == BinaryLabel::Positive ? uniform(6.5, 9.0) : uniform(1.0, 3.5);
    };
    ev.valence = rating();
    ev.arousal = rating();

    const bool responded = unit(rng) < spec.response_rate;
    if (responded && cls.center_hz > 0.0) {
      const double freq = cls.center_hz + uniform(-1.0, 1.0);
      const double event_gain = uniform(0.8, 1.2);
      const auto start = static_cast<std::size_t>(std::llround(ev.onset_s * fs));
      const std::size_t end = std::min(n_samples, start + event_len);
      for (std::size_t c = 0; c < channels; ++c) {
        const double amp = spec.oscillation_uv * gains[c] * event_gain;
        const double phase = uniform(0.0, 2.0 * std::numbers::pi);
        auto row = rec.data.row(c);
        for (std::size_t t = start; t < end; ++t) {
          row[t] += amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t - start) / fs + phase);
        }
      }
    }
    out.events.push_back(std::move(ev));
  }
  return out;
}

void synth_generate(const SynthSpec& spec, const std::filesystem::path& root) {
  for (int s = 0; s < spec.n_subjects; ++s) {
    const auto subject = synth_subject(spec, s);
    save_recording(root / subject.recording.subject_id, subject.recording, subject.events);
  }
}

}  // namespace affekt
