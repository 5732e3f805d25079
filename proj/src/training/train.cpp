#include "fedin/training/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fedin/metrics/metrics.hpp"
#include "fedin/numerics/ops.hpp"
#include "fedin/training/loss.hpp"

namespace fedin {

const char* to_string(SelectionMetric m) { return m == SelectionMetric::Auc ? "auc" : "gauc"; }

SelectionMetric selection_metric_from_string(const std::string& s) {
  if (s == "auc") return SelectionMetric::Auc;
  if (s == "gauc") return SelectionMetric::Gauc;
  throw ConfigError("unknown selection metric '" + s + "' (expected auc or gauc)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be positive");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ConfigError("train: adam_eps must be positive");
}

std::vector<double> predict_all(const CtrModel& model, const std::vector<SequenceSample>& samples) {
  std::vector<double> p(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) p[i] = model.predict(samples[i]);
  return p;
}

EvalMetrics evaluate(const CtrModel& model, const std::vector<SequenceSample>& samples) {
  const std::vector<double> p = predict_all(model, samples);
  std::vector<ScoredExample> scored(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(p[i])) throw NumericError("evaluate: non-finite prediction for sample " + std::to_string(i));
    scored[i] = {samples[i].user_id, p[i], samples[i].label};
  }
  EvalMetrics m;
  m.count = samples.size();
  m.auc = auc(scored);
  try {
    m.gauc = gauc(scored);
  } catch (const UndefinedMetricError&) {
    m.gauc = std::numeric_limits<double>::quiet_NaN();
  }
  m.logloss = logloss(scored);
  return m;
}

double train_step(CtrModel& model, const std::vector<const SequenceSample*>& batch, long step, const TrainConfig& cfg) {
  const auto b = static_cast<double>(batch.size());
  std::unique_ptr<ForwardTrace> trace = model.new_trace();
  double loss = 0;
  for (const SequenceSample* s : batch) {
    const double z = model.forward(*s, trace.get());
    const double y = s->label;
    loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    model.backward(*trace, (sigmoid(z) - y) / b);
  }
  loss /= b;
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  const double norm = cfg.clip_norm > 0 ? clip_grad_norm(model.params(), cfg.clip_norm) : model.params().grad_norm();
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  adam_step(model.params(), step, cfg.adam());
  return loss;
}

TrainReport train(CtrModel& model, const std::vector<SequenceSample>& train_set,
                  const std::vector<SequenceSample>& val_set, const std::vector<SequenceSample>& test_set,
                  const TrainConfig& cfg, const EpochCallback& callback) {
  cfg.validate();
  if (train_set.empty() || val_set.empty() || test_set.empty()) throw DataError("train: every split must be non-empty");
  auto has_both = [](const std::vector<SequenceSample>& v) {
    bool pos = false, neg = false;
    for (const auto& s : v) (s.label > 0.5 ? pos : neg) = true;
    return pos && neg;
  };
  if (!has_both(val_set)) throw DataError("train: validation split needs both labels");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  ParameterStore best = model.params();
  double best_score = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  model.params().zero_grad();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t batches = 0;
    std::vector<const SequenceSample*> batch;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train_set[order[i]]);
      try {
        loss_sum += train_step(model, batch, ++report.steps, cfg);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches + 1) + ": " + e.what());
      }
      ++batches;
    }

    const EvalMetrics val = evaluate(model, val_set);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.val_auc = val.auc;
    rec.val_gauc = val.gauc;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    if (callback.on_epoch) callback.on_epoch(rec);

    double score = val.select(cfg.selection_metric);
    if (std::isnan(score)) score = val.auc;
    if (score > best_score) {
      best_score = score;
      best.copy_values_from(model.params());
      report.best_epoch = epoch;
      report.best_val = val;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      report.early_stopped = epoch < cfg.max_epochs;
      break;
    }
  }
  model.params().copy_values_from(best);
  report.test = evaluate(model, test_set);
  return report;
}

}  // namespace fedin
