#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lulc/core/clock.hpp"
#include "lulc/data/batches.hpp"
#include "lulc/nn/optimizer.hpp"

namespace lulc::train {

using data::BatchOptions;
using data::BatchStream;
using data::LabeledSet;
using data::SplitAssignment;
using nn::Model;
using nn::OptimizerState;

struct TrainConfig {
  std::size_t max_epochs = 10;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  std::size_t patience = 3;
  std::size_t warmup_epochs = 5;  // bench mode only
  double min_delta = 1e-6;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
    if (!(min_delta >= 0.0)) throw InvalidArgument("min_delta must be >= 0");
  }
};

/// One pass over a stream: mean loss over samples, accuracy, iteration count and duration.
struct PhaseResult {
  double loss = 0.0;
  double acc = 0.0;
  std::size_t iters = 0;
  std::size_t samples = 0;
  double seconds = 0.0;
  double it_per_s() const { return seconds > 0.0 ? static_cast<double>(iters) / seconds : 0.0; }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
  double epoch_seconds = 0;
  std::size_t train_iters = 0, val_iters = 0;
  double train_it_per_s = 0, val_it_per_s = 0;
};

inline std::string describe_batch_failure(std::size_t epoch, std::size_t batch, double loss) {
  std::ostringstream os;
  os << "non-finite training loss " << loss << " at epoch " << epoch << ", batch " << batch;
  return os.str();
}

/// Forward, loss, backward and one optimizer step per batch. With a learning
/// rate of zero the model is frozen: no step is taken, the velocity stays as it
/// was and BatchNorm running statistics are restored after every batch.
inline PhaseResult train_epoch(Model<float>& model, OptimizerState<float>& opt, BatchStream& stream, Clock& clock,
                               std::size_t epoch = 1) {
  if (stream.size() == 0) throw InvalidArgument("training stream is empty");
  MonotonicClock mono(clock);
  PhaseResult r;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  const bool frozen = opt.lr == 0.0;
  const auto frozen_buffers = frozen ? model.buffers : nn::ParamMap<float>{};
  const double t0 = mono.now();
  std::size_t b = 0;
  while (auto batch = stream.next()) {
    nn::ForwardCache<float> cache;
    auto logits = nn::forward(model, batch->images, nn::Mode::train, &cache);
    auto ce = nn::cross_entropy(logits, std::span<const int>(batch->labels));
    if (!std::isfinite(ce.loss)) throw NumericalError(describe_batch_failure(epoch, b, ce.loss));
    if (frozen) {
      model.buffers = frozen_buffers;
    } else {
      auto grads = nn::backward(model, cache, ce.grad_logits);
      nn::sgd_momentum_step(model.params, grads, opt);
    }
    const auto pred = nn::argmax_rows(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch->labels[i];
    loss_sum += ce.loss * static_cast<double>(pred.size());
    r.samples += pred.size();
    ++r.iters;
    ++b;
  }
  r.seconds = mono.now() - t0;
  r.loss = loss_sum / static_cast<double>(r.samples);
  r.acc = static_cast<double>(correct) / static_cast<double>(r.samples);
  return r;
}

/// Eval-mode forward over a stream; the model is not modified.
inline PhaseResult validate(const Model<float>& model, BatchStream& stream, Clock& clock) {
  if (stream.size() == 0) throw InvalidArgument("validation stream is empty");
  MonotonicClock mono(clock);
  PhaseResult r;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  const double t0 = mono.now();
  while (auto batch = stream.next()) {
    auto logits = nn::forward(model, batch->images);
    auto ce = nn::cross_entropy(logits, std::span<const int>(batch->labels));
    const auto pred = nn::argmax_rows(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch->labels[i];
    loss_sum += ce.loss * static_cast<double>(pred.size());
    r.samples += pred.size();
    ++r.iters;
  }
  r.seconds = mono.now() - t0;
  r.loss = loss_sum / static_cast<double>(r.samples);
  r.acc = static_cast<double>(correct) / static_cast<double>(r.samples);
  return r;
}

/// Patience counter: an epoch improves when its loss is below best - min_delta.
/// Training stops once `patience` epochs in a row fail to improve, i.e. after
/// epoch best + patience + 1 when epochs are counted from zero.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  /// Records the loss of the next epoch; returns true when training should stop.
  bool update(double val_loss) {
    const std::size_t epoch = seen_++;
    if (!has_best_ || val_loss < best_ - min_delta_) {
      best_ = val_loss;
      best_epoch_ = epoch;
      has_best_ = true;
      stale_ = 0;
      return false;
    }
    return ++stale_ >= std::max<std::size_t>(patience_, 1);
  }
  bool improved_last() const { return has_best_ && best_epoch_ + 1 == seen_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 0-based
  double best_loss() const { return best_; }

 private:
  std::size_t patience_;
  double min_delta_;
  std::size_t seen_ = 0;
  std::size_t stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool has_best_ = false;
  std::size_t best_epoch_ = 0;
};

enum class StopReason { completed, early_stopped };

inline const char* stop_reason_name(StopReason r) {
  return r == StopReason::completed ? "completed" : "early_stopped";
}

struct FitHooks {
  /// Replaces the measured validation loss used for model selection and early
  /// stopping: (1-based epoch, measured loss) -> loss.
  std::function<double(std::size_t, double)> val_loss;
  /// Called after every epoch with the record just appended.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  Model<float> best_model;
  OptimizerState<float> best_optimizer;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<EpochRecord> records;
  StopReason stop_reason = StopReason::completed;
};

/// Batch options for the training and validation streams of a run.
inline BatchOptions train_stream_options(const BatchOptions& base, const TrainConfig& cfg) {
  BatchOptions o = base;
  o.batch_size = cfg.batch_size;
  o.shuffle = true;
  o.augment = true;
  o.seed = cfg.seed;
  return o;
}

inline BatchOptions eval_stream_options(const BatchOptions& base, const TrainConfig& cfg) {
  BatchOptions o = base;
  o.batch_size = cfg.batch_size;
  o.shuffle = false;
  o.augment = false;
  o.seed = cfg.seed;
  return o;
}

/// One training epoch followed by validation, timed as a whole.
inline EpochRecord run_epoch(Model<float>& model, OptimizerState<float>& opt, const LabeledSet& set,
                             const SplitAssignment& split, const BatchOptions& train_opt,
                             const BatchOptions& val_opt, Clock& clock, std::size_t epoch) {
  MonotonicClock mono(clock);
  const double t0 = mono.now();
  BatchStream train_stream(set, split.train_idx, train_opt, epoch - 1);
  const auto tr = train_epoch(model, opt, train_stream, mono, epoch);
  BatchStream val_stream(set, split.val_idx, val_opt, epoch - 1);
  const auto va = validate(model, val_stream, mono);
  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss = tr.loss;
  rec.train_acc = tr.acc;
  rec.val_loss = va.loss;
  rec.val_acc = va.acc;
  rec.train_iters = tr.iters;
  rec.val_iters = va.iters;
  rec.train_it_per_s = tr.it_per_s();
  rec.val_it_per_s = va.it_per_s();
  rec.epoch_seconds = mono.now() - t0;
  return rec;
}

/// Trains for up to max_epochs with early stopping on validation loss and
/// returns the weights of the best epoch.
inline FitResult fit(Model<float> model, const TrainConfig& cfg, const LabeledSet& set, const SplitAssignment& split,
                     const BatchOptions& data_opt, Clock& clock, const FitHooks& hooks = {}) {
  cfg.validate();
  if (split.train_idx.empty()) throw InvalidArgument("training split is empty");
  if (split.val_idx.empty()) throw InvalidArgument("validation split is empty");
  auto opt = nn::make_optimizer(model.params, cfg.lr, cfg.momentum);
  const auto train_opt = train_stream_options(data_opt, cfg);
  const auto val_opt = eval_stream_options(data_opt, cfg);
  EarlyStopping stopper(cfg.patience, cfg.min_delta);
  FitResult out;
  out.best_model = model;
  out.best_optimizer = opt;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto rec = run_epoch(model, opt, set, split, train_opt, val_opt, clock, epoch);
    if (hooks.val_loss) rec.val_loss = hooks.val_loss(epoch, rec.val_loss);
    out.records.push_back(rec);
    const bool stop = stopper.update(rec.val_loss);
    if (stopper.improved_last()) {
      out.best_model = model;
      out.best_optimizer = opt;
      out.best_epoch = epoch;
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (stop) {
      out.stop_reason = epoch < cfg.max_epochs ? StopReason::early_stopped : StopReason::completed;
      return out;
    }
  }
  out.stop_reason = StopReason::completed;
  return out;
}

}  // namespace lulc::train
