#include "affekt/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "affekt/error.hpp"

namespace affekt {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::CalmingStimuli: return "calming_stimuli";
    case Strategy::BreathingExercise: return "breathing_exercise";
    case Strategy::PositiveAffirmation: return "positive_affirmation";
  }
  return "calming_stimuli";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

InterventionTrigger::InterventionTrigger(int consecutive, StrategyPolicy policy, Strategy fixed)
    : consecutive_(consecutive), policy_(policy), fixed_(fixed) {
  if (consecutive < 1) throw Error(ErrorKind::InvalidParams, "trigger needs at least one consecutive window");
}

std::optional<Strategy> InterventionTrigger::observe(BinaryLabel detected) {
  if (detected != BinaryLabel::Negative) {
    run_ = 0;
    return std::nullopt;
  }
  if (++run_ < consecutive_) return std::nullopt;
  run_ = 0;
  const Strategy s = policy_ == StrategyPolicy::Fixed ? fixed_ : kAllStrategies[emitted_ % std::size(kAllStrategies)];
  ++emitted_;
  return s;
}

void StreamConfig::validate() const {
  if (window_len == 0 || hop_samples == 0) throw Error(ErrorKind::InvalidParams, "stream window and hop must be positive");
  if (trigger_consecutive < 1) throw Error(ErrorKind::InvalidParams, "trigger_consecutive must be >= 1");
}

std::vector<InterventionEvent> StreamResult::events() const {
  std::vector<InterventionEvent> out;
  for (const auto& w : windows) {
    if (w.event) out.push_back(*w.event);
  }
  return out;
}

StreamResult stream_classify(const Recording& rec, const CnnConfig& config, const ModelParams& params,
                             const StreamConfig& stream, const FilterSpec& filter, const PsdSpec& psd) {
  rec.validate();
  stream.validate();
  if (rec.n_samples() < stream.window_len) {
    throw Error(ErrorKind::RecordingTooShort, "recording of " + std::to_string(rec.n_samples()) +
                                                  " samples is shorter than one window of " +
                                                  std::to_string(stream.window_len));
  }
  if (static_cast<std::size_t>(config.input_channels) != rec.n_channels()) {
    throw Error(ErrorKind::ShapeMismatch, "model expects " + std::to_string(config.input_channels) +
                                              " channels, recording has " + std::to_string(rec.n_channels()));
  }
  const FilterRealization notch = design_filter(filter);
  const double fs = rec.sample_rate_hz;
  InterventionTrigger trigger(stream.trigger_consecutive, stream.policy, stream.fixed_strategy);

  StreamResult out;
  std::size_t index = 0;
  for (std::size_t start = 0; start + stream.window_len <= rec.n_samples(); start += stream.hop_samples, ++index) {
    const auto t0 = std::chrono::steady_clock::now();
    LabeledWindow w;
    w.data = Matrix(rec.n_channels(), stream.window_len);
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      const auto filtered = filtfilt(notch, rec.data.row(c).subspan(start, stream.window_len));
      auto row = w.data.row(c);
      std::copy(filtered.begin(), filtered.end(), row.begin());
      zscore_in_place(row);
    }
    const FeatureMatrix fm = build_feature_matrix(w, fs, psd);
    const Matrix probs = forward(config, params, {std::span<const double>(fm.values.values())});
    const auto t1 = std::chrono::steady_clock::now();

    WindowDecision d;
    char id[32];
    std::snprintf(id, sizeof(id), "/w%05zu", index);
    d.window_id = rec.subject_id + id;
    d.start_sample = start;
    d.t_s = static_cast<double>(start + stream.window_len) / fs;
    d.p_negative = probs(0, 0);
    d.predicted = probs(0, 0) >= probs(0, 1) ? BinaryLabel::Negative : BinaryLabel::Positive;
    d.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (auto s = trigger.observe(d.predicted)) {
      d.event = InterventionEvent{d.t_s, d.window_id, BinaryLabel::Negative, *s, d.p_negative};
    }
    out.mean_latency_ms += d.latency_ms;
    out.max_latency_ms = std::max(out.max_latency_ms, d.latency_ms);
    out.windows.push_back(std::move(d));
  }
  out.mean_latency_ms /= static_cast<double>(out.windows.size());
  return out;
}

}  // namespace affekt
