#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "affekt/matrix.hpp"

namespace affekt {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool operator==(const NamedTensor&) const = default;
};

/// Ordered parameter set. Gradients and optimizer moments use the same layout.
struct ModelParams {
  std::vector<NamedTensor> tensors;

  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);
  bool operator==(const ModelParams&) const = default;
};

struct BlockSpec {
  int out_width = 4;
  int stride = 1;
  bool residual = false;
};

/// Single-map C x F input image -> 3x3 conv blocks -> global average pool ->
/// dense K -> softmax.
struct CnnConfig {
  int input_channels = 4;  ///< feature-matrix rows
  int input_bins = 128;    ///< feature-matrix columns
  std::vector<BlockSpec> blocks;
  int n_classes = 2;
  std::uint64_t seed = 0;

  void validate() const;

  /// Small network sized for CPU training on 128-bin feature matrices.
  static CnnConfig desk_scale(int input_channels, int input_bins, int n_classes, std::uint64_t seed);
};

/// Kaiming-uniform weights (fan-in), zero biases.
ModelParams init_params(const CnnConfig& config);

/// Flattened C x F inputs.
using InputBatch = std::vector<std::span<const double>>;

/// Pre-softmax scores, one row per input.
Matrix forward_logits(const CnnConfig& config, const ModelParams& params, const InputBatch& batch);

/// Class probabilities, one row per input.
Matrix forward(const CnnConfig& config, const ModelParams& params, const InputBatch& batch);

Matrix softmax_rows(const Matrix& logits);

/// Mean over rows of -log(max(p[label], 1e-12)).
double cross_entropy(const Matrix& probs, std::span<const int> labels);

struct LossGradient {
  double loss = 0.0;
  Matrix probs;
  ModelParams grads;  ///< d(mean loss)/d(param), same layout as the parameters
};

LossGradient backward(const CnnConfig& config, const ModelParams& params, const InputBatch& batch,
                      std::span<const int> labels);

// ---------------------------------------------------------------------------
// Optimization

/// lr0 * decay^epoch, epoch counted from 0.
double lr_at(int epoch, double lr0 = 1e-3, double decay = 0.99);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               const AdamConfig& adam = {});

struct TrainConfig {
  int max_epochs = 400;
  double lr0 = 1e-3;
  double lr_decay = 0.99;
  std::size_t batch_size = 32;
  AdamConfig adam;
  int early_stop_patience = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledInputs {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return inputs.size(); }
  InputBatch batch(std::span<const std::size_t> indices) const;
};

/// Tracks the best validation loss; a strictly lower loss counts as improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when `val_loss` improves on the best seen so far.
  bool observe(double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int since_best_ = 0;
  bool seen_ = false;
  double best_ = 0.0;
};

struct EpochRecord {
  int epoch = 0;  ///< 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  int epochs_run = 0;
  bool stopped_early = false;
  std::vector<EpochRecord> log;
};

/// Called after every epoch with the parameters reached at its end.
using EpochCallback = std::function<void(const EpochRecord&, const ModelParams&)>;

TrainResult train(const CnnConfig& config, ModelParams initial, const LabeledInputs& train_set,
                  const LabeledInputs& val_set, const TrainConfig& tcfg, const EpochCallback& on_epoch = {});

struct TaskMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double time_per_batch_ms = 0.0;
  std::size_t n = 0;
};

/// Loss and argmax accuracy over all samples; wall-clock forward time per batch.
TaskMetrics evaluate(const CnnConfig& config, const ModelParams& params, const LabeledInputs& set,
                     std::size_t batch_size = 32);

// ---------------------------------------------------------------------------
// Checkpoints: "EEGM", u32 version, u32 json length, config JSON, u32 tensor
// count, then per tensor u32 name length, name, u32 rank, u32 dims, f32 values.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const CnnConfig& config, const ModelParams& params);

struct Checkpoint {
  CnnConfig config;
  ModelParams params;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace affekt
