#include "fedin/model/layers.hpp"

#include <cmath>

#include "fedin/numerics/ops.hpp"

namespace fedin {

void glorot_uniform(MatrixXd& w, Index fan_in, Index fan_out, Rng& rng, double scale) {
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  uniform_fill(w, -limit, limit, rng);
}

void uniform_fill(MatrixXd& w, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
}

MatrixXd relu(const MatrixXd& x) { return x.cwiseMax(0.0); }

MatrixXd relu_backward(const MatrixXd& pre_activation, const MatrixXd& grad_out) {
  require_same_shape(pre_activation, grad_out, "relu_backward");
  return (pre_activation.array() > 0.0).select(grad_out, 0.0);
}

// ---------------------------------------------------------------- Linear

Linear::Linear(ParameterStore& store, const std::string& name, Index in, Index out, bool bias)
    : weight_(&store.add(name + ".w", out, in)),
      bias_(bias ? &store.add_vector(name + ".b", out) : nullptr),
      in_(in),
      out_(out) {}

void Linear::init(Rng& rng) {
  glorot_uniform(weight_->value, in_, out_, rng);
  if (bias_) bias_->value.setZero();
}

MatrixXd Linear::forward(const MatrixXd& x, LinearCache& cache) const {
  if (x.cols() != in_) {
    throw DimensionError(weight_->name + ": input " + shape_string(x) + " does not have " + std::to_string(in_) +
                         " columns");
  }
  cache.input = x;
  MatrixXd y(x.rows(), out_);
  y.noalias() = x * weight_->value.transpose();
  if (bias_) y.rowwise() += bias_->value.col(0).transpose();
  return y;
}

MatrixXd Linear::backward(const LinearCache& cache, const MatrixXd& grad_out) const {
  if (grad_out.rows() != cache.input.rows() || grad_out.cols() != out_) {
    throw DimensionError(weight_->name + ": upstream gradient " + shape_string(grad_out) + " does not match cache");
  }
  weight_->grad.noalias() += grad_out.transpose() * cache.input;
  if (bias_) bias_->grad.col(0) += grad_out.colwise().sum().transpose();
  MatrixXd gx(grad_out.rows(), in_);
  gx.noalias() = grad_out * weight_->value;
  return gx;
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, Index dim)
    : gamma_(&store.add_vector(name + ".gamma", dim)), beta_(&store.add_vector(name + ".beta", dim)) {}

void LayerNorm::init() {
  gamma_->value.setOnes();
  beta_->value.setZero();
}

MatrixXd LayerNorm::forward(const MatrixXd& x, LayerNormCache& cache) const {
  const Index n = x.rows(), d = x.cols();
  if (d != gamma_->value.rows()) throw DimensionError(gamma_->name + ": input " + shape_string(x));
  cache.normalized.resize(n, d);
  cache.inv_std.resize(n);
  MatrixXd y(n, d);
  for (Index r = 0; r < n; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    cache.inv_std(r) = inv;
    cache.normalized.row(r) = (x.row(r).array() - mean) * inv;
    y.row(r) = cache.normalized.row(r).cwiseProduct(gamma_->value.col(0).transpose()) + beta_->value.col(0).transpose();
  }
  return y;
}

MatrixXd LayerNorm::backward(const LayerNormCache& cache, const MatrixXd& grad_out) const {
  require_same_shape(cache.normalized, grad_out, "LayerNorm::backward");
  const Index n = grad_out.rows();
  const auto d = static_cast<double>(grad_out.cols());
  MatrixXd gx(n, grad_out.cols());
  for (Index r = 0; r < n; ++r) {
    gamma_->grad.col(0) += grad_out.row(r).cwiseProduct(cache.normalized.row(r)).transpose();
    beta_->grad.col(0) += grad_out.row(r).transpose();
    const RowVector<double> gh = grad_out.row(r).cwiseProduct(gamma_->value.col(0).transpose());
    const double mean_gh = gh.sum() / d;
    const double mean_ghx = gh.dot(cache.normalized.row(r)) / d;
    gx.row(r) = cache.inv_std(r) * (gh.array() - mean_gh - cache.normalized.row(r).array() * mean_ghx);
  }
  return gx;
}

// ---------------------------------------------------------------- Attention

MultiHeadSelfAttention::MultiHeadSelfAttention(ParameterStore& store, const std::string& name, Index dim, Index heads)
    : q_(store, name + ".q", dim, dim),
      k_(store, name + ".k", dim, dim, false),
      v_(store, name + ".v", dim, dim),
      o_(store, name + ".o", dim, dim),
      dim_(dim),
      heads_(heads) {
  if (heads < 1 || dim % heads != 0) {
    throw ConfigError("attention: embedding dim " + std::to_string(dim) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

void MultiHeadSelfAttention::init(Rng& rng) {
  q_.init(rng);
  k_.init(rng);
  v_.init(rng);
  o_.init(rng);
}

MatrixXd MultiHeadSelfAttention::forward(const MatrixXd& x, AttentionCache& cache) const {
  const Index n = x.rows(), dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  cache.q = q_.forward(x, cache.q_in);
  cache.k = k_.forward(x, cache.k_in);
  cache.v = v_.forward(x, cache.v_in);
  cache.weights.assign(static_cast<size_t>(heads_), MatrixXd());
  MatrixXd concat(n, dim_);
  for (Index h = 0; h < heads_; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    MatrixXd scores(n, n);
    scores.noalias() = qh * kh.transpose();
    scores *= scale;
    MatrixXd& w = cache.weights[static_cast<size_t>(h)];
    w = softmax(scores, Axis::Cols);
    concat.middleCols(h * dh, dh).noalias() = w * vh;
  }
  return o_.forward(concat, cache.o_in);
}

MatrixXd MultiHeadSelfAttention::backward(const AttentionCache& cache, const MatrixXd& grad_out) const {
  const Index n = grad_out.rows(), dh = dim_ / heads_;
  if (static_cast<Index>(cache.weights.size()) != heads_) throw UsageError("attention: cache from another layer");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const MatrixXd g_concat = o_.backward(cache.o_in, grad_out);
  MatrixXd gq(n, dim_), gk(n, dim_), gv(n, dim_);
  for (Index h = 0; h < heads_; ++h) {
    const MatrixXd& w = cache.weights[static_cast<size_t>(h)];
    const auto g_oh = g_concat.middleCols(h * dh, dh);
    const MatrixXd g_w = g_oh * cache.v.middleCols(h * dh, dh).transpose();
    gv.middleCols(h * dh, dh).noalias() = w.transpose() * g_oh;
    MatrixXd g_scores = softmax_rows_backward(w, g_w);
    g_scores *= scale;
    gq.middleCols(h * dh, dh).noalias() = g_scores * cache.k.middleCols(h * dh, dh);
    gk.middleCols(h * dh, dh).noalias() = g_scores.transpose() * cache.q.middleCols(h * dh, dh);
  }
  MatrixXd gx = q_.backward(cache.q_in, gq);
  gx += k_.backward(cache.k_in, gk);
  gx += v_.backward(cache.v_in, gv);
  return gx;
}

// ---------------------------------------------------------------- FeedForward

FeedForward::FeedForward(ParameterStore& store, const std::string& name, Index dim, Index hidden)
    : l1_(store, name + ".l1", dim, hidden), l2_(store, name + ".l2", hidden, dim) {}

void FeedForward::init(Rng& rng) {
  l1_.init(rng);
  l2_.init(rng);
}

MatrixXd FeedForward::forward(const MatrixXd& x, FeedForwardCache& cache) const {
  cache.pre_activation = l1_.forward(x, cache.in1);
  return l2_.forward(relu(cache.pre_activation), cache.in2);
}

MatrixXd FeedForward::backward(const FeedForwardCache& cache, const MatrixXd& grad_out) const {
  const MatrixXd gh = l2_.backward(cache.in2, grad_out);
  return l1_.backward(cache.in1, relu_backward(cache.pre_activation, gh));
}

// ---------------------------------------------------------------- EncoderBlock

EncoderBlock::EncoderBlock(ParameterStore& store, const std::string& name, Index dim, Index heads)
    : ln1_(store, name + ".ln1", dim),
      ln2_(store, name + ".ln2", dim),
      attn_(store, name + ".attn", dim, heads),
      ffn_(store, name + ".ffn", dim, 4 * dim) {}

void EncoderBlock::init(Rng& rng) {
  ln1_.init();
  ln2_.init();
  attn_.init(rng);
  ffn_.init(rng);
}

MatrixXd EncoderBlock::forward(const MatrixXd& x, EncoderBlockCache& cache) const {
  MatrixXd h = x + attn_.forward(ln1_.forward(x, cache.ln1), cache.attn);
  MatrixXd y = h + ffn_.forward(ln2_.forward(h, cache.ln2), cache.ffn);
  return y;
}

MatrixXd EncoderBlock::backward(const EncoderBlockCache& cache, const MatrixXd& grad_out) const {
  MatrixXd gh = grad_out + ln2_.backward(cache.ln2, ffn_.backward(cache.ffn, grad_out));
  return gh + ln1_.backward(cache.ln1, attn_.backward(cache.attn, gh));
}

// ---------------------------------------------------------------- ComplexLinear

ComplexLinear::ComplexLinear(ParameterStore& store, const std::string& name, Index in, Index out)
    : a_(&store.add(name + ".real", out, in)),
      b_(&store.add(name + ".imag", out, in)),
      c_(&store.add_vector(name + ".bias_real", out)),
      d_(&store.add_vector(name + ".bias_imag", out)) {}

void ComplexLinear::init(Rng& rng) {
  // Each plane at Glorot/sqrt(2) so the complex weight variance matches the real target.
  const Index in = a_->value.cols(), out = a_->value.rows();
  glorot_uniform(a_->value, in, out, rng, 1.0 / std::sqrt(2.0));
  glorot_uniform(b_->value, in, out, rng, 1.0 / std::sqrt(2.0));
  c_->value.setZero();
  d_->value.setZero();
}

void ComplexLinear::set_identity() {
  a_->value.setIdentity();
  b_->value.setZero();
  c_->value.setZero();
  d_->value.setZero();
}

SpectrumXd ComplexLinear::forward(const SpectrumXd& x, ComplexLinearCache& cache) const {
  if (x.cols() != a_->value.cols()) {
    throw DimensionError(a_->name + ": input " + shape_string(x.real) + " does not have " +
                         std::to_string(a_->value.cols()) + " columns");
  }
  cache.input = x;
  const auto& a = a_->value;
  const auto& b = b_->value;
  SpectrumXd y(x.rows(), a.rows());
  y.real.noalias() = x.real * a.transpose();
  y.real.noalias() -= x.imag * b.transpose();
  y.imag.noalias() = x.imag * a.transpose();
  y.imag.noalias() += x.real * b.transpose();
  y.real.rowwise() += c_->value.col(0).transpose();
  y.imag.rowwise() += d_->value.col(0).transpose();
  return y;
}

SpectrumXd ComplexLinear::backward(const ComplexLinearCache& cache, const SpectrumXd& grad_out) const {
  const SpectrumXd& x = cache.input;
  if (grad_out.rows() != x.rows() || grad_out.cols() != a_->value.rows()) {
    throw DimensionError(a_->name + ": upstream gradient " + shape_string(grad_out.real) + " does not match cache");
  }
  const auto& a = a_->value;
  const auto& b = b_->value;
  a_->grad.noalias() += grad_out.real.transpose() * x.real;
  a_->grad.noalias() += grad_out.imag.transpose() * x.imag;
  b_->grad.noalias() -= grad_out.real.transpose() * x.imag;
  b_->grad.noalias() += grad_out.imag.transpose() * x.real;
  c_->grad.col(0) += grad_out.real.colwise().sum().transpose();
  d_->grad.col(0) += grad_out.imag.colwise().sum().transpose();
  SpectrumXd gx(x.rows(), x.cols());
  gx.real.noalias() = grad_out.real * a;
  gx.real.noalias() += grad_out.imag * b;
  gx.imag.noalias() = grad_out.imag * a;
  gx.imag.noalias() -= grad_out.real * b;
  return gx;
}

}  // namespace fedin
