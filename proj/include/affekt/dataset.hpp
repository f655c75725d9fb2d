#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affekt/labels.hpp"
#include "affekt/signal.hpp"

namespace affekt {

struct EmotionEvent {
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::string trial_type;
  double valence = 5.0;
  double arousal = 5.0;
  std::string emotion_name;
};

/// Emotion name -> categorical id, ids assigned in order of first registration.
class EmotionTable {
 public:
  EmotionTable() = default;
  explicit EmotionTable(std::vector<std::string> names);

  int register_name(const std::string& name);
  /// Throws UnknownEmotionName for names never registered.
  int id_of(const std::string& name) const;

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> ids_;
};

enum class RatingDimension { Arousal, Valence };

struct LabelingOptions {
  double low = 4.0;
  double high = 6.0;
  RatingDimension dimension = RatingDimension::Arousal;
};

/// Binary label from the configured rating (below low: Negative, above high:
/// Positive, otherwise neutral) and categorical id from the frozen table.
ClassLabel label_from_ratings(const EmotionEvent& ev, const EmotionTable& table,
                              const LabelingOptions& options = {});

// ---------------------------------------------------------------------------
// BIDS-like recording directory: eeg.json, eeg.f32, events.tsv

struct RecordingWithEvents {
  Recording recording;
  std::vector<EmotionEvent> events;
};

RecordingWithEvents load_recording(const std::filesystem::path& dir);
void save_recording(const std::filesystem::path& dir, const Recording& rec,
                    const std::vector<EmotionEvent>& events);

/// Subject directories (names starting with "sub-") under `root`, sorted.
std::vector<std::filesystem::path> list_subject_dirs(const std::filesystem::path& root);

// ---------------------------------------------------------------------------

struct SkippedEvent {
  std::size_t event_index = 0;
  std::string reason;
};

struct WindowExtraction {
  std::vector<LabeledWindow> windows;
  std::vector<SkippedEvent> skipped;
};

/// One window per event anchored at round(onset * fs). Events shorter than
/// the window, or running past the end of the recording, are skipped.
WindowExtraction extract_windows(const Recording& rec, const std::vector<EmotionEvent>& events,
                                 const EmotionTable& table, std::size_t window_len = 1500,
                                 const LabelingOptions& options = {});

// ---------------------------------------------------------------------------
// SMOTE

struct SmoteSpec {
  int k_neighbors = 5;
  std::uint64_t seed = 0;
};

/// Where an output row came from. Synthetic rows satisfy
/// x = x[base] + u * (x[neighbor] - x[base]) with base/neighbor indexing the input.
struct SmoteOrigin {
  bool synthetic = false;
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double u = 0.0;
};

struct SmoteResult {
  std::vector<std::vector<double>> points;
  std::vector<int> classes;
  std::vector<SmoteOrigin> origin;
};

/// Oversamples every class up to the majority count. Originals are copied
/// unchanged, in order, ahead of the synthetic rows.
SmoteResult smote_resample(const std::vector<std::vector<double>>& points, const std::vector<int>& classes,
                           const SmoteSpec& spec);

// ---------------------------------------------------------------------------
// Splits

enum class SplitUnit { Window, Subject };

struct SplitOptions {
  std::array<double, 3> ratios{0.70, 0.15, 0.15};
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  SplitUnit unit = SplitUnit::Window;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Stratified by categorical class. `subjects` is only consulted for
/// SplitUnit::Subject. Throws EmptyClass if any class in [0, n_classes) has
/// no windows.
DatasetSplit split_dataset(const std::vector<int>& classes, int n_classes, const SplitOptions& options,
                           const std::vector<std::string>& subjects = {});

using Batch = std::vector<std::size_t>;

/// Consecutive batches of `batch_size`, the last one possibly ragged.
std::vector<Batch> make_batches(const std::vector<std::size_t>& indices, std::size_t batch_size);

struct BatchedSplit {
  DatasetSplit split;
  std::vector<Batch> train;
  std::vector<Batch> val;
  std::vector<Batch> test;
};

BatchedSplit split_and_batch(const std::vector<int>& classes, int n_classes, const SplitOptions& options,
                             const std::vector<std::string>& subjects = {});

// ---------------------------------------------------------------------------
// Synthetic EEG

struct EmotionClassSpec {
  std::string name;
  std::optional<BinaryLabel> binary;  ///< absent: neutral
  double center_hz = 0.0;             ///< band oscillation frequency; 0 for none
  double weight = 1.0;                ///< relative sampling frequency
};

struct SynthSpec {
  int n_subjects = 40;
  int n_events_per_subject = 8;
  int channels = 128;
  double sample_rate_hz = 512.0;
  double event_duration_s = 3.0;
  double event_spacing_s = 3.5;
  double lead_in_s = 0.5;
  double background_uv = 10.0;
  double background_exponent = 2.0;  ///< aperiodic background power falls as 1/f^exponent
  double oscillation_uv = 8.0;
  double powerline_uv = 4.0;
  double powerline_hz = 50.0;
  double response_rate = 0.92;  ///< fraction of events that carry the class oscillation
  std::vector<EmotionClassSpec> classes = default_classes();
  std::uint64_t seed = 0;

  static std::vector<EmotionClassSpec> default_classes();
};

std::vector<std::string> default_channel_names(int channels);

/// In-memory recording for one subject. Subject seeds derive from seed ^ index.
RecordingWithEvents synth_subject(const SynthSpec& spec, int subject_index);

/// Writes sub-XX directories in the load_recording format under `root`.
void synth_generate(const SynthSpec& spec, const std::filesystem::path& root);

}  // namespace affekt
