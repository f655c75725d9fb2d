#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affekt/features.hpp"
#include "affekt/labels.hpp"
#include "affekt/model.hpp"
#include "affekt/signal.hpp"

namespace affekt {

enum class Strategy { CalmingStimuli, BreathingExercise, PositiveAffirmation };

inline constexpr Strategy kAllStrategies[] = {Strategy::CalmingStimuli, Strategy::BreathingExercise,
                                              Strategy::PositiveAffirmation};

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

enum class StrategyPolicy { Fixed, RoundRobin };

struct InterventionEvent {
  double timestamp_s = 0.0;
  std::string window_id;
  BinaryLabel detected_class = BinaryLabel::Negative;
  Strategy strategy = Strategy::CalmingStimuli;
  double confidence = 0.0;
};

/// Fires after `consecutive` Negative windows in a row, then starts counting
/// again from zero.
class InterventionTrigger {
 public:
  InterventionTrigger(int consecutive, StrategyPolicy policy, Strategy fixed = Strategy::CalmingStimuli);

  std::optional<Strategy> observe(BinaryLabel detected);

 private:
  int consecutive_;
  StrategyPolicy policy_;
  Strategy fixed_;
  int run_ = 0;
  std::size_t emitted_ = 0;
};

struct StreamConfig {
  std::size_t window_len = 1500;
  std::size_t hop_samples = 375;
  int trigger_consecutive = 1;
  StrategyPolicy policy = StrategyPolicy::RoundRobin;
  Strategy fixed_strategy = Strategy::CalmingStimuli;

  void validate() const;
};

struct WindowDecision {
  std::string window_id;
  std::size_t start_sample = 0;
  double t_s = 0.0;  ///< time at which the window is complete
  BinaryLabel predicted = BinaryLabel::Positive;
  double p_negative = 0.0;
  double latency_ms = 0.0;
  std::optional<InterventionEvent> event;
};

struct StreamResult {
  std::vector<WindowDecision> windows;
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;

  std::vector<InterventionEvent> events() const;
};

/// Slides a window over `rec`; each window is notch-filtered, z-scored,
/// turned into a feature matrix and classified by the binary model
/// (class 0 = Negative).
StreamResult stream_classify(const Recording& rec, const CnnConfig& config, const ModelParams& params,
                             const StreamConfig& stream, const FilterSpec& filter, const PsdSpec& psd);

}  // namespace affekt
