#pragma once

#include <vector>

#include "fedin/model/config.hpp"
#include "fedin/model/layers.hpp"

namespace fedin {

/// Gradient with respect to a sequence and the target embedding that scored it.
struct SequenceTargetGrad {
  MatrixXd sequence;
  VectorXd target;
};

// ------------------------------------------------------------------ RevIN

struct RevInCache {
  VectorXd mean;  // per channel, over valid rows
  VectorXd std;   // sqrt(var + eps)
  MatrixXd normalized;  // (x - mean) / std on valid rows, before the affine
  Index valid = 0;
  bool present = false;
};

struct RevInDenormCache {
  MatrixXd input;
};

/// Reversible instance normalization over the valid prefix of a sequence.
/// Statistics cached by `normalize` are reused by `denormalize`.
class RevIn {
 public:
  RevIn() = default;
  RevIn(ParameterStore& store, const std::string& name, Index dim);

  void init();

  /// Rows >= valid are left exactly zero.
  MatrixXd normalize(const MatrixXd& x, Index valid, RevInCache& cache) const;
  /// y -> (y - beta) / (gamma + eps^2) * std + mean, applied to every row.
  MatrixXd denormalize(const MatrixXd& y, const RevInCache& stats, RevInDenormCache& cache) const;

  /// `grad_mean` and `grad_std` carry gradient reaching the cached statistics
  /// through a later denormalize call.
  MatrixXd normalize_backward(const RevInCache& cache, const MatrixXd& grad_out, const VectorXd& grad_mean,
                              const VectorXd& grad_std) const;
  MatrixXd denormalize_backward(const RevInCache& stats, const RevInDenormCache& cache, const MatrixXd& grad_out,
                                VectorXd& grad_mean, VectorXd& grad_std) const;

  static constexpr double kEpsilon = 1e-5;

  Parameter& gamma() const { return *gamma_; }
  Parameter& beta() const { return *beta_; }

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
};

// ------------------------------------------------------------------ target attention

/// scores_i = <x_i, target> / alpha for every row, padding included.
VectorXd target_scores(const MatrixXd& x, const VectorXd& target, double alpha);
SequenceTargetGrad target_scores_backward(const MatrixXd& x, const VectorXd& target, double alpha,
                                          const VectorXd& grad_scores);

struct CoarseAttentionCache {
  MatrixXd x;
  VectorXd target;
  VectorXd weights;
  double alpha = 1;
};

/// Row i of the output is w_i * x_i with w = softmax over valid rows of the
/// target scores. Rows >= valid receive weight exactly zero.
MatrixXd coarse_target_attention(const MatrixXd& x, const VectorXd& target, double alpha, Index valid,
                                 CoarseAttentionCache& cache);
SequenceTargetGrad coarse_target_attention_backward(const CoarseAttentionCache& cache, const MatrixXd& grad_out);

struct TopKCache {
  MatrixXd x;
  VectorXd target;
  VectorXd weights;
  std::vector<Index> selected;
  double alpha = 1;
};

/// Top-k positions by score (ties to the lower index) among the valid prefix;
/// everything else masked to -inf before the softmax. With `use_topk` false
/// only padding is masked.
VectorXd topk_target_attention(const MatrixXd& x, const VectorXd& target, double alpha, Index k, Index valid,
                               bool use_topk, TopKCache& cache);
SequenceTargetGrad topk_target_attention_backward(const TopKCache& cache, const VectorXd& grad_out);

// ------------------------------------------------------------------ time branch

struct PatchifyCache {
  LinearCache proj;
};

/// [L x D] -> [N x D]: zero-pad to N*P rows, flatten each patch time-major,
/// project P*D -> D and add a learned per-patch position embedding.
class Patchify {
 public:
  Patchify() = default;
  Patchify(ParameterStore& store, const std::string& name, Index seq_len, Index patch, Index dim, bool positional);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, PatchifyCache& cache) const;
  MatrixXd backward(const PatchifyCache& cache, const MatrixXd& grad_out) const;

  Index num_patches() const { return patches_; }
  Linear& projection() { return proj_; }

 private:
  Linear proj_;
  Parameter* pos_ = nullptr;
  Index seq_len_ = 0, patch_ = 1, dim_ = 0, patches_ = 0;
  bool positional_ = true;
};

struct DepatchifyCache {
  LinearCache proj;
};

/// [N x D] -> [L x D]: project each token D -> P*D, unflatten and truncate.
class Depatchify {
 public:
  Depatchify() = default;
  Depatchify(ParameterStore& store, const std::string& name, Index seq_len, Index patch, Index dim);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& tokens, DepatchifyCache& cache) const;
  MatrixXd backward(const DepatchifyCache& cache, const MatrixXd& grad_out) const;

  Linear& projection() { return proj_; }

 private:
  Linear proj_;
  Index seq_len_ = 0, patch_ = 1, dim_ = 0, patches_ = 0;
};

struct TimeBranchCache {
  CoarseAttentionCache coarse;
  PatchifyCache patchify;
  std::vector<EncoderBlockCache> blocks;
  DepatchifyCache depatchify;
};

class TimeBranch {
 public:
  TimeBranch() = default;
  TimeBranch(ParameterStore& store, const std::string& name, const FedinConfig& cfg);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, const VectorXd& target, Index valid, TimeBranchCache& cache) const;
  SequenceTargetGrad backward(const TimeBranchCache& cache, const MatrixXd& grad_out) const;

  const std::vector<EncoderBlock>& blocks() const { return blocks_; }

 private:
  double alpha_ = 1;
  Patchify patchify_;
  std::vector<EncoderBlock> blocks_;
  Depatchify depatchify_;
};

// ------------------------------------------------------------------ frequency branch

struct ComplexMlpCache {
  ComplexLinearCache l1, l2;
  SpectrumXd hidden_pre;
  Index seq_len = 0;
};

/// Bin-shared two-layer complex MLP along channels with CReLU in between,
/// followed by the DC/Nyquist projection and the inverse real transform.
class ComplexMlpFilter {
 public:
  ComplexMlpFilter() = default;
  ComplexMlpFilter(ParameterStore& store, const std::string& name, Index dim, Index hidden);

  void init(Rng& rng);
  MatrixXd forward(const SpectrumXd& spectrum, Index seq_len, ComplexMlpCache& cache) const;
  SpectrumXd backward(const ComplexMlpCache& cache, const MatrixXd& grad_out) const;

  /// Skip the CReLU so the filter is a purely linear map.
  void set_linear(bool linear) { linear_ = linear; }
  ComplexLinear& layer1() { return l1_; }
  ComplexLinear& layer2() { return l2_; }

 private:
  ComplexLinear l1_, l2_;
  bool linear_ = false;
};

struct GateCache {
  LinearCache l1, l2;
  MatrixXd hidden_pre;
  MatrixXd filtered;  // unscaled branch output
  double gate = 0.5;
};

/// Scalar sigmoid gate from the score amplitude spectrum scaling the filter output.
class ResonanceGate {
 public:
  ResonanceGate() = default;
  ResonanceGate(ParameterStore& store, const std::string& name, Index bins, Index hidden);

  void init(Rng& rng);
  MatrixXd forward(const VectorXd& amplitude, const MatrixXd& filtered, GateCache& cache) const;
  /// Returns the gradient with respect to the filtered input; the amplitude
  /// gradient is written to `grad_amplitude`.
  MatrixXd backward(const GateCache& cache, const MatrixXd& grad_out, VectorXd& grad_amplitude) const;

  Linear& hidden_layer() { return l1_; }
  Linear& output_layer() { return l2_; }

 private:
  Linear l1_, l2_;
};

struct FreqBranchCache {
  MatrixXd x;
  VectorXd target;
  VectorXd scores;
  SpectrumXd score_spectrum;
  VectorXd amplitude;
  VectorXd bin_weights;
  SpectrumXd sequence_spectrum;
  ComplexMlpCache filter;
  GateCache gate;
};

/// Target-conditioned spectral filtering:
///   S = rfft(scores), w = softmax(|S|), Z = w (.) rfft(X),
///   F = irfft(CMLP(Z)), out = sigmoid(MLP(|S|)) * F.
class FreqBranch {
 public:
  FreqBranch() = default;
  FreqBranch(ParameterStore& store, const std::string& name, const FedinConfig& cfg);

  void init(Rng& rng);
  MatrixXd forward(const MatrixXd& x, const VectorXd& target, FreqBranchCache& cache) const;
  SequenceTargetGrad backward(const FreqBranchCache& cache, const MatrixXd& grad_out) const;

  ComplexMlpFilter& filter() { return filter_; }
  ResonanceGate& gate() { return gate_; }
  Parameter& static_filter() const { return *static_filter_; }

 private:
  double alpha_ = 1;
  Index seq_len_ = 0;
  bool target_aware_ = true;
  bool scaling_ = true;
  Parameter* static_filter_ = nullptr;
  ComplexMlpFilter filter_;
  ResonanceGate gate_;
};

/// Bins k = 0..L/2 of rfft(x) weighted by softmax(|rfft(scores)|), broadcast over channels.
SpectrumXd freq_target_spectrum(const MatrixXd& x, const VectorXd& scores);

// ------------------------------------------------------------------ head

struct HeadCache {
  std::vector<LinearCache> layers;
  std::vector<MatrixXd> pre_activations;
  VectorXd interest;
  VectorXd target;
};

/// concat(U, target, U (.) target) -> hidden ReLU layers -> logit.
class PredictionHead {
 public:
  PredictionHead() = default;
  PredictionHead(ParameterStore& store, const std::string& name, Index dim, const std::vector<Index>& hidden);

  void init(Rng& rng);
  double forward(const VectorXd& interest, const VectorXd& target, HeadCache& cache) const;
  /// Gradient with respect to (interest, target).
  std::pair<VectorXd, VectorXd> backward(const HeadCache& cache, double grad_logit) const;

  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
  Index dim_ = 0;
};

}  // namespace fedin
