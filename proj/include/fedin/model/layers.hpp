#pragma once

#include <random>
#include <string>
#include <vector>

#include "fedin/numerics/parameter_store.hpp"
#include "fedin/numerics/tensor.hpp"

namespace fedin {

// Every layer follows the same contract: `forward(input..., cache)` fills a
// cache with whatever the matching `backward(cache, upstream)` needs, and
// backward returns input gradients while accumulating into Parameter::grad.
// Row vectors are rows of a matrix: a sequence is [positions x channels].

using Rng = std::mt19937_64;

void glorot_uniform(MatrixXd& w, Index fan_in, Index fan_out, Rng& rng, double scale = 1.0);
void uniform_fill(MatrixXd& w, double lo, double hi, Rng& rng);

struct LinearCache {
  MatrixXd input;
};

/// y = x W^T + b with W [out x in].
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, Index in, Index out, bool bias = true);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, LinearCache& cache) const;
  MatrixXd backward(const LinearCache& cache, const MatrixXd& grad_out) const;

  Index in_features() const { return in_; }
  Index out_features() const { return out_; }
  Parameter& weight() const { return *weight_; }
  Parameter& bias() const { return *bias_; }
  bool has_bias() const { return bias_ != nullptr; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  Index in_ = 0, out_ = 0;
};

struct LayerNormCache {
  MatrixXd normalized;
  VectorXd inv_std;
};

/// Per-row normalization over channels with learned gain and shift.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, Index dim);

  void init();
  MatrixXd forward(const MatrixXd& x, LayerNormCache& cache) const;
  MatrixXd backward(const LayerNormCache& cache, const MatrixXd& grad_out) const;

  static constexpr double kEpsilon = 1e-5;

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
};

struct AttentionCache {
  LinearCache q_in, k_in, v_in, o_in;
  MatrixXd q, k, v;
  std::vector<MatrixXd> weights;  // one [N x N] matrix per head
};

/// Bidirectional multi-head self-attention with scaling 1/sqrt(D / heads).
/// The key projection has no bias: it would shift every score in a row
/// equally and so never receives gradient.
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParameterStore& store, const std::string& name, Index dim, Index heads);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, AttentionCache& cache) const;
  MatrixXd backward(const AttentionCache& cache, const MatrixXd& grad_out) const;

 private:
  Linear q_, k_, v_, o_;
  Index dim_ = 0, heads_ = 1;
};

struct FeedForwardCache {
  LinearCache in1, in2;
  MatrixXd pre_activation;
};

/// Position-wise D -> hidden -> D with ReLU.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParameterStore& store, const std::string& name, Index dim, Index hidden);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, FeedForwardCache& cache) const;
  MatrixXd backward(const FeedForwardCache& cache, const MatrixXd& grad_out) const;

 private:
  Linear l1_, l2_;
};

struct EncoderBlockCache {
  LayerNormCache ln1, ln2;
  AttentionCache attn;
  FeedForwardCache ffn;
};

/// Pre-norm transformer encoder block:
///   h = x + MHA(LN1(x)),  y = h + FFN(LN2(h)).
class EncoderBlock {
 public:
  EncoderBlock() = default;
  EncoderBlock(ParameterStore& store, const std::string& name, Index dim, Index heads);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, EncoderBlockCache& cache) const;
  MatrixXd backward(const EncoderBlockCache& cache, const MatrixXd& grad_out) const;

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadSelfAttention attn_;
  FeedForward ffn_;
};

struct ComplexLinearCache {
  SpectrumXd input;
};

/// Complex affine map applied to each row (frequency bin):
///   y = (A + iB)(x_r + i x_i) + (c + i d).
class ComplexLinear {
 public:
  ComplexLinear() = default;
  ComplexLinear(ParameterStore& store, const std::string& name, Index in, Index out);

  void init(Rng& rng);
  void set_identity();
  SpectrumXd forward(const SpectrumXd& x, ComplexLinearCache& cache) const;
  SpectrumXd backward(const ComplexLinearCache& cache, const SpectrumXd& grad_out) const;

  Parameter& weight_real() const { return *a_; }
  Parameter& weight_imag() const { return *b_; }
  Parameter& bias_real() const { return *c_; }
  Parameter& bias_imag() const { return *d_; }

 private:
  Parameter* a_ = nullptr;
  Parameter* b_ = nullptr;
  Parameter* c_ = nullptr;
  Parameter* d_ = nullptr;
};

MatrixXd relu(const MatrixXd& x);
MatrixXd relu_backward(const MatrixXd& pre_activation, const MatrixXd& grad_out);

}  // namespace fedin
