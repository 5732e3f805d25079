#include "fedin/model/model.hpp"

#include <cmath>

#include "fedin/numerics/ops.hpp"

namespace fedin {

void validate_sample(const SequenceSample& s, Index seq_len, Index num_items) {
  auto fail = [&](const std::string& msg) {
    throw DataError("sample (user " + std::to_string(s.user_id) + ", t=" + std::to_string(s.timestamp) + "): " + msg);
  };
  if (static_cast<Index>(s.item_ids.size()) != seq_len) {
    fail("history has " + std::to_string(s.item_ids.size()) + " slots, expected " + std::to_string(seq_len));
  }
  if (s.valid_len < 1 || s.valid_len > seq_len) fail("valid_len " + std::to_string(s.valid_len) + " out of range");
  for (Index i = 0; i < seq_len; ++i) {
    const int id = s.item_ids[static_cast<size_t>(i)];
    if (i < s.valid_len) {
      if (id <= kPaddingItem || id >= num_items) fail("item id " + std::to_string(id) + " out of vocabulary");
    } else if (id != kPaddingItem) {
      fail("non-padding id " + std::to_string(id) + " beyond valid_len");
    }
  }
  if (s.target_id <= kPaddingItem || s.target_id >= num_items) {
    fail("target id " + std::to_string(s.target_id) + " out of vocabulary");
  }
  if (s.label != 0.0 && s.label != 1.0) fail("label must be 0 or 1");
}

double CtrModel::predict(const SequenceSample& sample) const { return sigmoid(forward(sample, nullptr)); }

namespace {

Parameter& add_item_table(ParameterStore& store, const FedinConfig& cfg, Rng& rng) {
  Parameter& items = store.add("embed.item", cfg.num_items, cfg.embed_dim);
  uniform_fill(items.value, -kEmbeddingInitRange, kEmbeddingInitRange, rng);
  items.value.row(kPaddingItem).setZero();
  return items;
}

}  // namespace

// ------------------------------------------------------------------ FEDIN

struct FedinModel::Trace : ForwardTrace {
  std::vector<int> item_ids;
  Index valid = 0;
  int target_id = 0;
  VectorXd target;
  RevInCache revin;
  TimeBranchCache time;
  FreqBranchCache freq;
  RevInDenormCache denorm;
  TopKCache topk;
  HeadCache head;
};

FedinModel::FedinModel(const FedinConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  items_ = &add_item_table(store_, cfg_, rng);
  revin_ = RevIn(store_, "revin", cfg_.embed_dim);
  time_ = TimeBranch(store_, "time", cfg_);
  freq_ = FreqBranch(store_, "freq", cfg_);
  head_ = PredictionHead(store_, "head", cfg_.embed_dim, cfg_.head_hidden);
  revin_.init();
  time_.init(rng);
  freq_.init(rng);
  head_.init(rng);
}

std::unique_ptr<ForwardTrace> FedinModel::new_trace() const { return std::make_unique<Trace>(); }

MatrixXd FedinModel::embed_sequence(const SequenceSample& sample) const {
  validate_sample(sample, cfg_.max_seq_len, cfg_.num_items);
  MatrixXd x = MatrixXd::Zero(cfg_.max_seq_len, cfg_.embed_dim);
  for (Index i = 0; i < sample.valid_len; ++i) x.row(i) = items_->value.row(sample.item_ids[static_cast<size_t>(i)]);
  return x;
}

double FedinModel::forward(const SequenceSample& sample, ForwardTrace* trace) const {
  Trace local;
  Trace& t = trace ? dynamic_cast<Trace&>(*trace) : local;
  const MatrixXd x = embed_sequence(sample);
  t.item_ids = sample.item_ids;
  t.valid = sample.valid_len;
  t.target_id = sample.target_id;
  t.target = items_->value.row(sample.target_id).transpose();

  const MatrixXd xn = revin_.normalize(x, t.valid, t.revin);
  MatrixXd mix;
  if (cfg_.ablation == Ablation::NoTimeBranch) {
    mix = freq_.forward(xn, t.target, t.freq);
  } else if (cfg_.ablation == Ablation::NoFreqBranch) {
    mix = time_.forward(xn, t.target, t.valid, t.time);
  } else {
    mix = time_.forward(xn, t.target, t.valid, t.time);
    mix += freq_.forward(xn, t.target, t.freq);
  }
  const MatrixXd restored = revin_.denormalize(mix, t.revin, t.denorm);
  const VectorXd interest =
      topk_target_attention(restored, t.target, cfg_.resolved_alpha(), cfg_.top_k, t.valid, cfg_.use_topk, t.topk);
  return head_.forward(interest, t.target, t.head);
}

void FedinModel::backward(const ForwardTrace& trace, double grad_logit) {
  const auto& t = dynamic_cast<const Trace&>(trace);
  auto [g_interest, g_target] = head_.backward(t.head, grad_logit);
  SequenceTargetGrad g_restored = topk_target_attention_backward(t.topk, g_interest);
  g_target += g_restored.target;

  VectorXd g_mean, g_std;
  const MatrixXd g_mix = revin_.denormalize_backward(t.revin, t.denorm, g_restored.sequence, g_mean, g_std);
  MatrixXd g_xn = MatrixXd::Zero(g_mix.rows(), g_mix.cols());
  if (cfg_.ablation != Ablation::NoFreqBranch) {
    SequenceTargetGrad g = freq_.backward(t.freq, g_mix);
    g_xn += g.sequence;
    g_target += g.target;
  }
  if (cfg_.ablation != Ablation::NoTimeBranch) {
    SequenceTargetGrad g = time_.backward(t.time, g_mix);
    g_xn += g.sequence;
    g_target += g.target;
  }
  const MatrixXd g_x = revin_.normalize_backward(t.revin, g_xn, g_mean, g_std);
  if (fault_ != 0) g_target *= 1.0 + fault_;
  for (Index i = 0; i < t.valid; ++i) items_->grad.row(t.item_ids[static_cast<size_t>(i)]) += g_x.row(i);
  items_->grad.row(t.target_id) += g_target.transpose();
}

VectorXd FedinModel::target_score_signal(const SequenceSample& sample) const {
  RevInCache stats;
  const MatrixXd xn = revin_.normalize(embed_sequence(sample), sample.valid_len, stats);
  const VectorXd target = items_->value.row(sample.target_id).transpose();
  return target_scores(xn, target, cfg_.resolved_alpha());
}

// ------------------------------------------------------------------ sum pooling

struct SumPoolingModel::Trace : ForwardTrace {
  std::vector<int> item_ids;
  Index valid = 0;
  int target_id = 0;
  HeadCache head;
};

SumPoolingModel::SumPoolingModel(const FedinConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  items_ = &add_item_table(store_, cfg_, rng);
  head_ = PredictionHead(store_, "head", cfg_.embed_dim, cfg_.head_hidden);
  head_.init(rng);
}

std::unique_ptr<ForwardTrace> SumPoolingModel::new_trace() const { return std::make_unique<Trace>(); }

double SumPoolingModel::forward(const SequenceSample& sample, ForwardTrace* trace) const {
  validate_sample(sample, cfg_.max_seq_len, cfg_.num_items);
  Trace local;
  Trace& t = trace ? dynamic_cast<Trace&>(*trace) : local;
  t.item_ids = sample.item_ids;
  t.valid = sample.valid_len;
  t.target_id = sample.target_id;
  VectorXd pooled = VectorXd::Zero(cfg_.embed_dim);
  for (Index i = 0; i < sample.valid_len; ++i) {
    pooled += items_->value.row(sample.item_ids[static_cast<size_t>(i)]).transpose();
  }
  return head_.forward(pooled, items_->value.row(sample.target_id).transpose(), t.head);
}

void SumPoolingModel::backward(const ForwardTrace& trace, double grad_logit) {
  const auto& t = dynamic_cast<const Trace&>(trace);
  const auto [g_pooled, g_target] = head_.backward(t.head, grad_logit);
  for (Index i = 0; i < t.valid; ++i) items_->grad.row(t.item_ids[static_cast<size_t>(i)]) += g_pooled.transpose();
  items_->grad.row(t.target_id) += g_target.transpose();
}

std::unique_ptr<CtrModel> make_model(const std::string& kind, const FedinConfig& cfg, std::uint64_t seed) {
  if (kind == "fedin") return std::make_unique<FedinModel>(cfg, seed);
  if (kind == "sum_pooling") return std::make_unique<SumPoolingModel>(cfg, seed);
  throw ConfigError("unknown model type '" + kind + "' (expected fedin or sum_pooling)");
}

}  // namespace fedin
