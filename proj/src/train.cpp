#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "affekt/error.hpp"
#include "affekt/model.hpp"

namespace affekt {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw Error(ErrorKind::InvalidParams, "max_epochs must be >= 1");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error(ErrorKind::InvalidParams, "lr_decay must lie in (0, 1]");
  if (early_stop_patience < 1) throw Error(ErrorKind::InvalidParams, "early-stop patience must be >= 1");
  if (batch_size == 0) throw Error(ErrorKind::InvalidParams, "batch size must be positive");
}

InputBatch LabeledInputs::batch(std::span<const std::size_t> indices) const {
  InputBatch out;
  out.reserve(indices.size());
  for (auto i : indices) out.emplace_back(inputs[i]);
  return out;
}

bool EarlyStopping::observe(double val_loss) {
  if (!seen_ || val_loss < best_) {
    seen_ = true;
    best_ = val_loss;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

struct LossAcc {
  double loss = 0.0;
  double accuracy = 0.0;
  double forward_ms = 0.0;
  std::size_t batches = 0;
};

LossAcc score(const CnnConfig& config, const ModelParams& params, const LabeledInputs& set, std::size_t batch_size) {
  LossAcc out;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t end = std::min(set.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix probs = forward(config, params, set.batch(idx));
    const auto t1 = std::chrono::steady_clock::now();
    out.forward_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    ++out.batches;
    const std::span<const int> labels(set.labels.data() + start, end - start);
    loss_sum += cross_entropy(probs, labels) * static_cast<double>(end - start);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      const auto row = probs.row(r);
      const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      if (pred == labels[r]) ++correct;
    }
  }
  const auto n = static_cast<double>(set.size());
  out.loss = loss_sum / n;
  out.accuracy = static_cast<double>(correct) / n;
  return out;
}

}  // namespace

TrainResult train(const CnnConfig& config, ModelParams initial, const LabeledInputs& train_set,
                  const LabeledInputs& val_set, const TrainConfig& tcfg, const EpochCallback& on_epoch) {
  config.validate();
  tcfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw Error(ErrorKind::EmptyEvaluationSet, "training needs at least one train and one validation sample");
  }

  TrainResult result;
  ModelParams params = std::move(initial);
  result.best_params = params;
  AdamState state;
  EarlyStopping stopper(tcfg.early_stop_patience);
  std::mt19937_64 rng(tcfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const double lr = lr_at(epoch - 1, tcfg.lr0, tcfg.lr_decay);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::vector<int> labels;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      labels.clear();
      for (auto i : idx) labels.push_back(train_set.labels[i]);
      const LossGradient lg = backward(config, params, train_set.batch(idx), labels);
      loss_sum += lg.loss * static_cast<double>(idx.size());
      adam_step(params, lg.grads, state, lr, tcfg.adam);
    }

    const LossAcc val = score(config, params, val_set, tcfg.batch_size);
    EpochRecord rec{epoch, lr, loss_sum / static_cast<double>(order.size()), val.loss, val.accuracy};
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw Error(ErrorKind::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch));
    }
    result.log.push_back(rec);
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(rec, params);

    if (stopper.observe(rec.val_loss)) {
      result.best_params = params;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

TaskMetrics evaluate(const CnnConfig& config, const ModelParams& params, const LabeledInputs& set,
                     std::size_t batch_size) {
  if (set.size() == 0) throw Error(ErrorKind::EmptyEvaluationSet, "evaluation set is empty");
  if (batch_size == 0) throw Error(ErrorKind::InvalidParams, "batch size must be positive");
  const LossAcc s = score(config, params, set, batch_size);
  TaskMetrics m;
  m.loss = s.loss;
  m.accuracy = s.accuracy;
  m.time_per_batch_ms = s.forward_ms / static_cast<double>(s.batches);
  m.n = set.size();
  return m;
}

}  // namespace affekt
