#pragma once

#include <memory>
#include <string>

#include "fedin/data/sample.hpp"
#include "fedin/model/components.hpp"
#include "fedin/model/config.hpp"

namespace fedin {

/// Saved activations of one forward pass through a CtrModel.
struct ForwardTrace {
  virtual ~ForwardTrace() = default;
};

/// A click-through model scored one sample at a time. Backward accumulates
/// into the parameter gradients; the caller owns zeroing and the optimizer.
class CtrModel {
 public:
  virtual ~CtrModel() = default;

  virtual std::string kind() const = 0;
  virtual const FedinConfig& config() const = 0;
  virtual ParameterStore& params() = 0;
  virtual const ParameterStore& params() const = 0;

  virtual std::unique_ptr<ForwardTrace> new_trace() const = 0;
  /// Returns the logit. `trace` may be null for inference.
  virtual double forward(const SequenceSample& sample, ForwardTrace* trace) const = 0;
  virtual void backward(const ForwardTrace& trace, double grad_logit) = 0;

  double predict(const SequenceSample& sample) const;
};

/// Dual-branch model: RevIN -> {time branch, frequency branch} -> sum ->
/// inverse RevIN -> top-k target attention -> prediction head.
class FedinModel : public CtrModel {
 public:
  FedinModel(const FedinConfig& cfg, std::uint64_t seed);
  FedinModel(const FedinModel&) = delete;
  FedinModel& operator=(const FedinModel&) = delete;

  std::string kind() const override { return "fedin"; }
  const FedinConfig& config() const override { return cfg_; }
  ParameterStore& params() override { return store_; }
  const ParameterStore& params() const override { return store_; }

  std::unique_ptr<ForwardTrace> new_trace() const override;
  double forward(const SequenceSample& sample, ForwardTrace* trace) const override;
  void backward(const ForwardTrace& trace, double grad_logit) override;

  /// Target-attention scores of the (normalized) history against the target,
  /// the signal whose spectrum the frequency branch conditions on.
  VectorXd target_score_signal(const SequenceSample& sample) const;

  /// Scales the target-embedding gradient by (1 + factor). Zero disables it.
  /// Exists only so the gradient checker has a negative control.
  void inject_gradient_fault_for_testing(double factor) { fault_ = factor; }

  TimeBranch& time_branch() { return time_; }
  FreqBranch& freq_branch() { return freq_; }
  PredictionHead& head() { return head_; }
  RevIn& revin() { return revin_; }

 private:
  struct Trace;

  MatrixXd embed_sequence(const SequenceSample& sample) const;

  FedinConfig cfg_;
  ParameterStore store_;
  Parameter* items_ = nullptr;
  RevIn revin_;
  TimeBranch time_;
  FreqBranch freq_;
  PredictionHead head_;
  double fault_ = 0;
};

/// Baseline: sum of the valid history embeddings fed to the same head.
class SumPoolingModel : public CtrModel {
 public:
  SumPoolingModel(const FedinConfig& cfg, std::uint64_t seed);
  SumPoolingModel(const SumPoolingModel&) = delete;
  SumPoolingModel& operator=(const SumPoolingModel&) = delete;

  std::string kind() const override { return "sum_pooling"; }
  const FedinConfig& config() const override { return cfg_; }
  ParameterStore& params() override { return store_; }
  const ParameterStore& params() const override { return store_; }

  std::unique_ptr<ForwardTrace> new_trace() const override;
  double forward(const SequenceSample& sample, ForwardTrace* trace) const override;
  void backward(const ForwardTrace& trace, double grad_logit) override;

 private:
  struct Trace;

  FedinConfig cfg_;
  ParameterStore store_;
  Parameter* items_ = nullptr;
  PredictionHead head_;
};

std::unique_ptr<CtrModel> make_model(const std::string& kind, const FedinConfig& cfg, std::uint64_t seed);

/// Embedding table initialization range.
inline constexpr double kEmbeddingInitRange = 0.01;

}  // namespace fedin
