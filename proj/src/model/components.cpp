#include "fedin/model/components.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fedin/numerics/fft.hpp"
#include "fedin/numerics/ops.hpp"

namespace fedin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_valid_prefix(Index valid, Index rows, const char* where) {
  if (valid < 1 || valid > rows) {
    throw DataError(std::string(where) + ": valid length " + std::to_string(valid) + " outside [1, " +
                    std::to_string(rows) + "]");
  }
}

}  // namespace

// ------------------------------------------------------------------ RevIN

RevIn::RevIn(ParameterStore& store, const std::string& name, Index dim)
    : gamma_(&store.add_vector(name + ".gamma", dim)), beta_(&store.add_vector(name + ".beta", dim)) {}

void RevIn::init() {
  gamma_->value.setOnes();
  beta_->value.setZero();
}

MatrixXd RevIn::normalize(const MatrixXd& x, Index valid, RevInCache& cache) const {
  require_valid_prefix(valid, x.rows(), "revin_normalize");
  const Index d = x.cols();
  if (d != gamma_->value.rows()) throw DimensionError("revin_normalize: input " + shape_string(x));
  const auto top = x.topRows(valid);
  cache.valid = valid;
  cache.mean = top.colwise().mean().transpose();
  cache.std.resize(d);
  for (Index c = 0; c < d; ++c) {
    const double var = (top.col(c).array() - cache.mean(c)).square().mean();
    cache.std(c) = std::sqrt(var + kEpsilon);
  }
  cache.normalized = MatrixXd::Zero(x.rows(), d);
  MatrixXd out = MatrixXd::Zero(x.rows(), d);
  for (Index r = 0; r < valid; ++r) {
    cache.normalized.row(r) = (x.row(r) - cache.mean.transpose()).cwiseQuotient(cache.std.transpose());
    out.row(r) = cache.normalized.row(r).cwiseProduct(gamma_->value.col(0).transpose()) + beta_->value.col(0).transpose();
  }
  cache.present = true;
  return out;
}

MatrixXd RevIn::denormalize(const MatrixXd& y, const RevInCache& stats, RevInDenormCache& cache) const {
  if (!stats.present) throw UsageError("revin_denormalize: no statistics from a matching normalize call");
  if (y.cols() != stats.mean.size()) throw DimensionError("revin_denormalize: input " + shape_string(y));
  cache.input = y;
  const RowVector<double> denom = gamma_->value.col(0).transpose().array() + kEpsilon * kEpsilon;
  MatrixXd out(y.rows(), y.cols());
  for (Index r = 0; r < y.rows(); ++r) {
    out.row(r) = ((y.row(r) - beta_->value.col(0).transpose()).cwiseQuotient(denom))
                     .cwiseProduct(stats.std.transpose()) +
                 stats.mean.transpose();
  }
  return out;
}

MatrixXd RevIn::normalize_backward(const RevInCache& cache, const MatrixXd& grad_out, const VectorXd& grad_mean,
                                   const VectorXd& grad_std) const {
  if (!cache.present) throw UsageError("revin_normalize backward: empty cache");
  require_same_shape(cache.normalized, grad_out, "revin_normalize backward");
  const Index n = cache.valid, d = grad_out.cols();
  const auto nd = static_cast<double>(n);
  MatrixXd gx = MatrixXd::Zero(grad_out.rows(), d);
  for (Index c = 0; c < d; ++c) {
    const double gamma = gamma_->value(c, 0);
    double sum_g = 0, sum_gx = 0;
    for (Index r = 0; r < n; ++r) {
      const double g = grad_out(r, c);
      gamma_->grad(c, 0) += g * cache.normalized(r, c);
      beta_->grad(c, 0) += g;
      sum_g += g * gamma;
      sum_gx += g * gamma * cache.normalized(r, c);
    }
    const double mean_g = sum_g / nd, mean_gx = sum_gx / nd;
    const double inv = 1.0 / cache.std(c);
    for (Index r = 0; r < n; ++r) {
      const double xhat = cache.normalized(r, c);
      gx(r, c) = inv * (grad_out(r, c) * gamma - mean_g - xhat * mean_gx) + grad_mean(c) / nd + grad_std(c) * xhat / nd;
    }
  }
  return gx;
}

MatrixXd RevIn::denormalize_backward(const RevInCache& stats, const RevInDenormCache& cache, const MatrixXd& grad_out,
                                     VectorXd& grad_mean, VectorXd& grad_std) const {
  require_same_shape(cache.input, grad_out, "revin_denormalize backward");
  const Index d = grad_out.cols();
  grad_mean = VectorXd::Zero(d);
  grad_std = VectorXd::Zero(d);
  MatrixXd gy(grad_out.rows(), d);
  for (Index c = 0; c < d; ++c) {
    const double denom = gamma_->value(c, 0) + kEpsilon * kEpsilon;
    const double s = stats.std(c), b = beta_->value(c, 0);
    for (Index r = 0; r < grad_out.rows(); ++r) {
      const double g = grad_out(r, c);
      const double shifted = cache.input(r, c) - b;
      gy(r, c) = g * s / denom;
      beta_->grad(c, 0) -= g * s / denom;
      gamma_->grad(c, 0) -= g * shifted * s / (denom * denom);
      grad_std(c) += g * shifted / denom;
      grad_mean(c) += g;
    }
  }
  return gy;
}

// ------------------------------------------------------------------ target attention

VectorXd target_scores(const MatrixXd& x, const VectorXd& target, double alpha) {
  if (x.cols() != target.size()) {
    throw DimensionError("target_scores: sequence " + shape_string(x) + " vs target of size " +
                         std::to_string(target.size()));
  }
  VectorXd s(x.rows());
  for (Index i = 0; i < x.rows(); ++i) s(i) = x.row(i).dot(target.transpose()) / alpha;
  return s;
}

SequenceTargetGrad target_scores_backward(const MatrixXd& x, const VectorXd& target, double alpha,
                                          const VectorXd& grad_scores) {
  SequenceTargetGrad g;
  g.sequence = (grad_scores / alpha) * target.transpose();
  g.target = x.transpose() * grad_scores / alpha;
  return g;
}

MatrixXd coarse_target_attention(const MatrixXd& x, const VectorXd& target, double alpha, Index valid,
                                 CoarseAttentionCache& cache) {
  require_valid_prefix(valid, x.rows(), "coarse_target_attention");
  VectorXd s = target_scores(x, target, alpha);
  s.tail(x.rows() - valid).setConstant(kNegInf);
  cache.x = x;
  cache.target = target;
  cache.alpha = alpha;
  cache.weights = softmax(s);
  MatrixXd out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = cache.weights(i) * x.row(i);
  return out;
}

SequenceTargetGrad coarse_target_attention_backward(const CoarseAttentionCache& cache, const MatrixXd& grad_out) {
  require_same_shape(cache.x, grad_out, "coarse_target_attention backward");
  const Index n = cache.x.rows();
  VectorXd gw(n);
  MatrixXd gx(n, cache.x.cols());
  for (Index i = 0; i < n; ++i) {
    gw(i) = grad_out.row(i).dot(cache.x.row(i));
    gx.row(i) = cache.weights(i) * grad_out.row(i);
  }
  const VectorXd gs = softmax_backward(cache.weights, gw);
  SequenceTargetGrad via_scores = target_scores_backward(cache.x, cache.target, cache.alpha, gs);
  via_scores.sequence += gx;
  return via_scores;
}

VectorXd topk_target_attention(const MatrixXd& x, const VectorXd& target, double alpha, Index k, Index valid,
                               bool use_topk, TopKCache& cache) {
  require_valid_prefix(valid, x.rows(), "topk_target_attention");
  if (k < 1) throw ConfigError("topk_target_attention: k must be >= 1");
  VectorXd s = target_scores(x, target, alpha);
  s.tail(x.rows() - valid).setConstant(kNegInf);
  std::vector<Index> order(static_cast<size_t>(valid));
  std::iota(order.begin(), order.end(), Index{0});
  if (use_topk && k < valid) {
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s(a) > s(b); });
    for (size_t r = static_cast<size_t>(k); r < order.size(); ++r) s(order[r]) = kNegInf;
    order.resize(static_cast<size_t>(k));
    std::sort(order.begin(), order.end());
  }
  cache.x = x;
  cache.target = target;
  cache.alpha = alpha;
  cache.selected = std::move(order);
  cache.weights = softmax(s);
  VectorXd u = VectorXd::Zero(x.cols());
  for (Index i = 0; i < x.rows(); ++i) u += cache.weights(i) * x.row(i).transpose();
  return u;
}

SequenceTargetGrad topk_target_attention_backward(const TopKCache& cache, const VectorXd& grad_out) {
  if (grad_out.size() != cache.x.cols()) throw DimensionError("topk_target_attention backward: gradient size");
  const Index n = cache.x.rows();
  VectorXd gw(n);
  MatrixXd gx(n, cache.x.cols());
  for (Index i = 0; i < n; ++i) {
    gw(i) = cache.x.row(i).dot(grad_out.transpose());
    gx.row(i) = cache.weights(i) * grad_out.transpose();
  }
  const VectorXd gs = softmax_backward(cache.weights, gw);
  SequenceTargetGrad via_scores = target_scores_backward(cache.x, cache.target, cache.alpha, gs);
  via_scores.sequence += gx;
  return via_scores;
}

// ------------------------------------------------------------------ patching

Patchify::Patchify(ParameterStore& store, const std::string& name, Index seq_len, Index patch, Index dim,
                   bool positional)
    : proj_(store, name + ".proj", patch * dim, dim),
      seq_len_(seq_len),
      patch_(patch),
      dim_(dim),
      patches_((seq_len + patch - 1) / patch),
      positional_(positional) {
  pos_ = &store.add(name + ".pos", patches_, dim);
}

void Patchify::init(Rng& rng) {
  proj_.init(rng);
  uniform_fill(pos_->value, -0.01, 0.01, rng);
}

MatrixXd Patchify::forward(const MatrixXd& x, PatchifyCache& cache) const {
  if (x.rows() != seq_len_ || x.cols() != dim_) throw DimensionError("patchify: input " + shape_string(x));
  MatrixXd padded = MatrixXd::Zero(patches_ * patch_, dim_);
  padded.topRows(seq_len_) = x;
  const Eigen::Map<const MatrixXd> flat(padded.data(), patches_, patch_ * dim_);
  MatrixXd tokens = proj_.forward(flat, cache.proj);
  if (positional_) tokens += pos_->value;
  return tokens;
}

MatrixXd Patchify::backward(const PatchifyCache& cache, const MatrixXd& grad_out) const {
  if (positional_) pos_->grad += grad_out;
  MatrixXd g_flat = proj_.backward(cache.proj, grad_out);
  const Eigen::Map<const MatrixXd> g_rows(g_flat.data(), patches_ * patch_, dim_);
  return g_rows.topRows(seq_len_);
}

Depatchify::Depatchify(ParameterStore& store, const std::string& name, Index seq_len, Index patch, Index dim)
    : proj_(store, name + ".proj", dim, patch * dim),
      seq_len_(seq_len),
      patch_(patch),
      dim_(dim),
      patches_((seq_len + patch - 1) / patch) {}

void Depatchify::init(Rng& rng) { proj_.init(rng); }

MatrixXd Depatchify::forward(const MatrixXd& tokens, DepatchifyCache& cache) const {
  if (tokens.rows() != patches_ || tokens.cols() != dim_) throw DimensionError("depatchify: input " + shape_string(tokens));
  const MatrixXd flat = proj_.forward(tokens, cache.proj);
  const Eigen::Map<const MatrixXd> rows(flat.data(), patches_ * patch_, dim_);
  return rows.topRows(seq_len_);
}

MatrixXd Depatchify::backward(const DepatchifyCache& cache, const MatrixXd& grad_out) const {
  if (grad_out.rows() != seq_len_ || grad_out.cols() != dim_) {
    throw DimensionError("depatchify backward: gradient " + shape_string(grad_out));
  }
  MatrixXd padded = MatrixXd::Zero(patches_ * patch_, dim_);
  padded.topRows(seq_len_) = grad_out;
  const Eigen::Map<const MatrixXd> flat(padded.data(), patches_, patch_ * dim_);
  return proj_.backward(cache.proj, flat);
}

TimeBranch::TimeBranch(ParameterStore& store, const std::string& name, const FedinConfig& cfg)
    : alpha_(cfg.resolved_alpha()),
      patchify_(store, name + ".patch", cfg.max_seq_len, cfg.patch_size, cfg.embed_dim, cfg.patch_positional) {
  for (Index l = 0; l < cfg.transformer_layers; ++l) {
    blocks_.emplace_back(store, name + ".enc" + std::to_string(l), cfg.embed_dim, cfg.num_heads);
  }
  depatchify_ = Depatchify(store, name + ".depatch", cfg.max_seq_len, cfg.patch_size, cfg.embed_dim);
}

void TimeBranch::init(Rng& rng) {
  patchify_.init(rng);
  for (auto& b : blocks_) b.init(rng);
  depatchify_.init(rng);
}

MatrixXd TimeBranch::forward(const MatrixXd& x, const VectorXd& target, Index valid, TimeBranchCache& cache) const {
  MatrixXd h = patchify_.forward(coarse_target_attention(x, target, alpha_, valid, cache.coarse), cache.patchify);
  cache.blocks.resize(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) h = blocks_[b].forward(h, cache.blocks[b]);
  return depatchify_.forward(h, cache.depatchify);
}

SequenceTargetGrad TimeBranch::backward(const TimeBranchCache& cache, const MatrixXd& grad_out) const {
  MatrixXd g = depatchify_.backward(cache.depatchify, grad_out);
  for (size_t b = blocks_.size(); b-- > 0;) g = blocks_[b].backward(cache.blocks[b], g);
  return coarse_target_attention_backward(cache.coarse, patchify_.backward(cache.patchify, g));
}

// ------------------------------------------------------------------ frequency branch

ComplexMlpFilter::ComplexMlpFilter(ParameterStore& store, const std::string& name, Index dim, Index hidden)
    : l1_(store, name + ".w1", dim, hidden), l2_(store, name + ".w2", hidden, dim) {}

void ComplexMlpFilter::init(Rng& rng) {
  l1_.init(rng);
  l2_.init(rng);
}

MatrixXd ComplexMlpFilter::forward(const SpectrumXd& spectrum, Index seq_len, ComplexMlpCache& cache) const {
  cache.seq_len = seq_len;
  cache.hidden_pre = l1_.forward(spectrum, cache.l1);
  SpectrumXd hidden = cache.hidden_pre;
  if (!linear_) hidden = SpectrumXd(relu(hidden.real), relu(hidden.imag));
  return irfft(l2_.forward(hidden, cache.l2), seq_len);
}

SpectrumXd ComplexMlpFilter::backward(const ComplexMlpCache& cache, const MatrixXd& grad_out) const {
  if (grad_out.rows() != cache.seq_len) throw DimensionError("complex_mlp_filter backward: gradient " + shape_string(grad_out));
  SpectrumXd g = l2_.backward(cache.l2, irfft_backward(grad_out));
  if (!linear_) {
    g.real = relu_backward(cache.hidden_pre.real, g.real);
    g.imag = relu_backward(cache.hidden_pre.imag, g.imag);
  }
  return l1_.backward(cache.l1, g);
}

ResonanceGate::ResonanceGate(ParameterStore& store, const std::string& name, Index bins, Index hidden)
    : l1_(store, name + ".l1", bins, hidden), l2_(store, name + ".l2", hidden, 1) {}

void ResonanceGate::init(Rng& rng) {
  l1_.init(rng);
  l2_.init(rng);
}

MatrixXd ResonanceGate::forward(const VectorXd& amplitude, const MatrixXd& filtered, GateCache& cache) const {
  const MatrixXd row = amplitude.transpose();
  cache.hidden_pre = l1_.forward(row, cache.l1);
  const double z = l2_.forward(relu(cache.hidden_pre), cache.l2)(0, 0);
  cache.gate = sigmoid(z);
  cache.filtered = filtered;
  return cache.gate * filtered;
}

MatrixXd ResonanceGate::backward(const GateCache& cache, const MatrixXd& grad_out, VectorXd& grad_amplitude) const {
  require_same_shape(cache.filtered, grad_out, "resonance_gate backward");
  const double g = cache.gate;
  const double grad_gate = grad_out.cwiseProduct(cache.filtered).sum();
  MatrixXd gz(1, 1);
  gz(0, 0) = grad_gate * g * (1 - g);
  const MatrixXd gh = relu_backward(cache.hidden_pre, l2_.backward(cache.l2, gz));
  grad_amplitude = l1_.backward(cache.l1, gh).transpose();
  return g * grad_out;
}

FreqBranch::FreqBranch(ParameterStore& store, const std::string& name, const FedinConfig& cfg)
    : alpha_(cfg.resolved_alpha()),
      seq_len_(cfg.max_seq_len),
      target_aware_(cfg.ablation != Ablation::NoFreqTa),
      scaling_(cfg.ablation != Ablation::NoFreqScaling),
      static_filter_(&store.add_vector(name + ".static_filter", cfg.spectrum_bins())),
      filter_(store, name + ".cmlp", cfg.embed_dim, cfg.resolved_cmlp_hidden()),
      gate_(store, name + ".gate", cfg.spectrum_bins(), cfg.gate_hidden) {}

void FreqBranch::init(Rng& rng) {
  static_filter_->value.setConstant(1.0 / static_cast<double>(static_filter_->value.rows()));
  filter_.init(rng);
  gate_.init(rng);
}

MatrixXd FreqBranch::forward(const MatrixXd& x, const VectorXd& target, FreqBranchCache& cache) const {
  if (x.rows() != seq_len_) throw DimensionError("freq_branch: input " + shape_string(x));
  cache.x = x;
  cache.target = target;
  cache.scores = target_scores(x, target, alpha_);
  cache.score_spectrum = rfft(cache.scores);
  cache.amplitude = amplitude(cache.score_spectrum).col(0);
  cache.bin_weights = target_aware_ ? softmax(cache.amplitude) : VectorXd(static_filter_->value.col(0));
  cache.sequence_spectrum = rfft(x);
  MatrixXd filtered = filter_.forward(scale_rows(cache.sequence_spectrum, cache.bin_weights), seq_len_, cache.filter);
  if (!scaling_) return filtered;
  return gate_.forward(cache.amplitude, filtered, cache.gate);
}

SequenceTargetGrad FreqBranch::backward(const FreqBranchCache& cache, const MatrixXd& grad_out) const {
  VectorXd g_amp = VectorXd::Zero(cache.amplitude.size());
  MatrixXd g_filtered = grad_out;
  if (scaling_) g_filtered = gate_.backward(cache.gate, grad_out, g_amp);

  const SpectrumXd g_weighted = filter_.backward(cache.filter, g_filtered);
  const SpectrumXd& xf = cache.sequence_spectrum;
  VectorXd g_w(xf.rows());
  for (Index k = 0; k < xf.rows(); ++k) {
    g_w(k) = g_weighted.real.row(k).dot(xf.real.row(k)) + g_weighted.imag.row(k).dot(xf.imag.row(k));
  }
  MatrixXd gx = rfft_backward(scale_rows(g_weighted, cache.bin_weights), seq_len_);

  if (target_aware_) {
    g_amp += softmax_backward(cache.bin_weights, g_w);
  } else {
    static_filter_->grad.col(0) += g_w;
  }
  const MatrixXd amp = cache.amplitude;
  const SpectrumXd g_spec = amplitude_backward(cache.score_spectrum, amp, MatrixXd(g_amp));
  const VectorXd g_scores = rfft_backward(g_spec, seq_len_).col(0);
  SequenceTargetGrad out = target_scores_backward(cache.x, cache.target, alpha_, g_scores);
  out.sequence += gx;
  return out;
}

SpectrumXd freq_target_spectrum(const MatrixXd& x, const VectorXd& scores) {
  if (scores.size() != x.rows()) throw DimensionError("freq_target_spectrum: scores/sequence length mismatch");
  const VectorXd amp = amplitude(rfft(scores)).col(0);
  return scale_rows(rfft(x), softmax(amp));
}

// ------------------------------------------------------------------ head

PredictionHead::PredictionHead(ParameterStore& store, const std::string& name, Index dim,
                               const std::vector<Index>& hidden)
    : dim_(dim) {
  Index in = 3 * dim;
  for (size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(store, name + ".l" + std::to_string(i), in, hidden[i]);
    in = hidden[i];
  }
  layers_.emplace_back(store, name + ".out", in, 1);
}

void PredictionHead::init(Rng& rng) {
  for (auto& l : layers_) l.init(rng);
}

double PredictionHead::forward(const VectorXd& interest, const VectorXd& target, HeadCache& cache) const {
  if (interest.size() != dim_ || target.size() != dim_) throw DimensionError("prediction_head: input size");
  cache.interest = interest;
  cache.target = target;
  MatrixXd f(1, 3 * dim_);
  f.block(0, 0, 1, dim_) = interest.transpose();
  f.block(0, dim_, 1, dim_) = target.transpose();
  f.block(0, 2 * dim_, 1, dim_) = interest.cwiseProduct(target).transpose();
  cache.layers.resize(layers_.size());
  cache.pre_activations.resize(layers_.size() - 1);
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    cache.pre_activations[i] = layers_[i].forward(f, cache.layers[i]);
    f = relu(cache.pre_activations[i]);
  }
  return layers_.back().forward(f, cache.layers.back())(0, 0);
}

std::pair<VectorXd, VectorXd> PredictionHead::backward(const HeadCache& cache, double grad_logit) const {
  if (cache.layers.size() != layers_.size()) throw UsageError("prediction_head backward: cache from another head");
  MatrixXd g(1, 1);
  g(0, 0) = grad_logit;
  g = layers_.back().backward(cache.layers.back(), g);
  for (size_t i = layers_.size() - 1; i-- > 0;) {
    g = layers_[i].backward(cache.layers[i], relu_backward(cache.pre_activations[i], g));
  }
  const VectorXd gu_direct = g.block(0, 0, 1, dim_).transpose();
  const VectorXd gt_direct = g.block(0, dim_, 1, dim_).transpose();
  const VectorXd g_prod = g.block(0, 2 * dim_, 1, dim_).transpose();
  return {gu_direct + g_prod.cwiseProduct(cache.target), gt_direct + g_prod.cwiseProduct(cache.interest)};
}

}  // namespace fedin
