#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fedin/data/sample.hpp"
#include "fedin/model/model.hpp"
#include "fedin/training/adam.hpp"

namespace fedin {

enum class SelectionMetric { Auc, Gauc };

const char* to_string(SelectionMetric m);
SelectionMetric selection_metric_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 5e-4;
  Index batch_size = 256;
  int max_epochs = 10;
  int patience = 3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  SelectionMetric selection_metric = SelectionMetric::Gauc;

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

struct EvalMetrics {
  double auc = 0;
  double gauc = 0;
  double logloss = 0;
  std::size_t count = 0;

  double select(SelectionMetric m) const { return m == SelectionMetric::Auc ? auc : gauc; }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_auc = 0;
  double val_gauc = 0;
  double seconds = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  EvalMetrics best_val;
  EvalMetrics test;
  long steps = 0;
  bool early_stopped = false;
};

/// Probabilities for every sample, in order.
std::vector<double> predict_all(const CtrModel& model, const std::vector<SequenceSample>& samples);

/// AUC, GAUC and logloss of `model` on `samples`. GAUC falls back to NaN when
/// no user has both labels; AUC requires both labels.
EvalMetrics evaluate(const CtrModel& model, const std::vector<SequenceSample>& samples);

/// One optimizer step on `batch`: forward/backward with mean BCE, global-norm
/// clipping, Adam. Returns the batch loss. Throws NumericError on a
/// non-finite loss or gradient.
double train_step(CtrModel& model, const std::vector<const SequenceSample*>& batch, long step, const TrainConfig& cfg);

struct EpochCallback {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Seeded-shuffle mini-batch training with validation-based selection and
/// early stopping after `patience` epochs without improvement. On return the
/// model holds the best-epoch parameters and `test` is evaluated with them.
/// Throws NumericError naming the epoch and batch if training diverges.
TrainReport train(CtrModel& model, const std::vector<SequenceSample>& train_set,
                  const std::vector<SequenceSample>& val_set, const std::vector<SequenceSample>& test_set,
                  const TrainConfig& cfg, const EpochCallback& callback = {});

}  // namespace fedin
