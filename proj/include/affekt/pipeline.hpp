#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affekt/dataset.hpp"
#include "affekt/entropy.hpp"
#include "affekt/features.hpp"
#include "affekt/model.hpp"
#include "affekt/signal.hpp"
#include "affekt/stream.hpp"

namespace affekt {

struct NoiseStage {
  bool enabled = true;
  double max_magnitude = 4.0;
};

/// Everything a pipeline run needs. Stage seeds derive from `seed`.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path work_dir = "affekt_run";
  std::optional<std::filesystem::path> raw_dir;  ///< defaults to work_dir/raw

  SynthSpec synth;
  FilterKind filter_kind = FilterKind::BandStop;
  int filter_order = 4;
  std::vector<double> filter_edges_hz{48.0, 52.0};
  NoiseStage noise;
  EntropyParams entropy;
  int entropy_max_subjects = 1;
  PsdSpec psd;
  LabelingOptions labels;
  std::size_t window_len = 1500;
  SplitOptions split;
  int smote_k = 5;
  std::vector<BlockSpec> model_blocks = CnnConfig::desk_scale(1, 1, 2, 0).blocks;
  TrainConfig train;
  StreamConfig stream;
  std::optional<std::filesystem::path> stream_recording;

  /// Throws InvalidConfig on missing mandatory fields or bad values.
  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Re-derives every stage seed from `seed`.
  void set_seed(std::uint64_t master);

  FilterSpec filter_for(double sample_rate_hz) const;
  NoiseSpec noise_for_subject(std::size_t subject_index) const;
};

Recording preprocess_recording(const Recording& rec, const PipelineConfig& cfg);

/// One row per window or SMOTE-synthesized training sample.
struct FeatureRecord {
  std::string id;
  std::string subject_id;
  Matrix values;
  ClassLabel label;
  std::string split;  ///< "train", "val" or "test"
  bool synthetic = false;
  std::string base_id;
  std::string neighbor_id;
  double u = 0.0;
};

struct FeatureDataset {
  std::vector<std::string> emotions;
  std::size_t n_channels = 0;
  std::size_t n_bins = 0;
  std::vector<FeatureRecord> records;
  std::size_t skipped_events = 0;
};

/// Windows -> feature matrices -> stratified split -> SMOTE on the training
/// split only.
FeatureDataset build_feature_dataset(const std::vector<RecordingWithEvents>& recordings, const PipelineConfig& cfg);

void save_feature_dataset(const std::filesystem::path& dir, const FeatureDataset& ds);
FeatureDataset load_feature_dataset(const std::filesystem::path& dir);

enum class Task { Binary, Categorical };

/// Inputs of one split for a task. The binary task keeps only windows with a
/// binary label (0 = Negative, 1 = Positive).
LabeledInputs task_inputs(const FeatureDataset& ds, Task task, const std::string& split);

CnnConfig model_config_for(const FeatureDataset& ds, Task task, const PipelineConfig& cfg);

struct TrainedModel {
  CnnConfig config;
  TrainResult result;
};

TrainedModel train_task(const FeatureDataset& ds, Task task, const PipelineConfig& cfg);

struct MetricsReport {
  TaskMetrics binary;
  TaskMetrics categorical;
  double time_per_batch_ms = 0.0;
};

MetricsReport evaluate_models(const FeatureDataset& ds, const Checkpoint& binary, const Checkpoint& categorical,
                              std::size_t batch_size);

}  // namespace affekt
