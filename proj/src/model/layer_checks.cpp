#include "fedin/model/layer_checks.hpp"

#include <functional>
#include <set>

#include "fedin/numerics/fft.hpp"
#include "fedin/training/loss.hpp"

namespace fedin {

namespace {

MatrixXd random_matrix(Index rows, Index cols, Rng& rng, double range = 1.0) {
  MatrixXd m(rows, cols);
  uniform_fill(m, -range, range, rng);
  return m;
}

double project(const MatrixXd& out, const MatrixXd& weights) { return (out.array() * weights.array()).sum(); }

struct InputSlot {
  std::string name;
  MatrixXd* value;
  MatrixXd grad;
};

LayerCheckReport verify(const std::string& layer, ParameterStore& store, std::vector<InputSlot>& inputs,
                        const std::function<double()>& loss, const GradCheckOptions& options) {
  std::vector<GradCheckTarget> targets = targets_from_store(store);
  for (auto& in : inputs) {
    require_same_shape(*in.value, in.grad, "layer check input");
    targets.push_back({"input." + in.name, in.value->data(), in.grad.data(), in.value->size(), {}});
  }
  return {layer, finite_difference_check(loss, targets, options)};
}

FedinConfig shape_config(const LayerCheckShape& s) {
  FedinConfig cfg;
  cfg.embed_dim = s.dim;
  cfg.max_seq_len = s.seq_len;
  cfg.patch_size = s.patch;
  cfg.top_k = s.top_k;
  cfg.num_heads = s.heads;
  cfg.num_items = 10;
  return cfg;
}

MatrixXd padded_sequence(const LayerCheckShape& s, Index valid, Rng& rng) {
  MatrixXd x = random_matrix(s.seq_len, s.dim, rng);
  x.bottomRows(s.seq_len - valid).setZero();
  return x;
}

}  // namespace

std::vector<LayerCheckReport> run_layer_gradchecks(std::uint64_t seed, const GradCheckOptions& options,
                                                   const LayerCheckShape& shape) {
  std::vector<LayerCheckReport> reports;
  Rng rng(seed);
  const Index d = shape.dim, n_tok = 4;

  {  // linear
    ParameterStore store;
    Linear layer(store, "linear", d, 5);
    layer.init(rng);
    uniform_fill(layer.bias().value, -0.5, 0.5, rng);
    MatrixXd x = random_matrix(n_tok, d, rng), r = random_matrix(n_tok, 5, rng);
    LinearCache c;
    layer.forward(x, c);
    std::vector<InputSlot> in{{"x", &x, layer.backward(c, r)}};
    reports.push_back(verify("linear", store, in, [&] { LinearCache t; return project(layer.forward(x, t), r); }, options));
  }
  {  // layer norm
    ParameterStore store;
    LayerNorm layer(store, "layer_norm", d);
    layer.init();
    uniform_fill(store.at("layer_norm.gamma").value, 0.5, 1.5, rng);
    uniform_fill(store.at("layer_norm.beta").value, -0.5, 0.5, rng);
    MatrixXd x = random_matrix(n_tok, d, rng), r = random_matrix(n_tok, d, rng);
    LayerNormCache c;
    layer.forward(x, c);
    std::vector<InputSlot> in{{"x", &x, layer.backward(c, r)}};
    reports.push_back(
        verify("layer_norm", store, in, [&] { LayerNormCache t; return project(layer.forward(x, t), r); }, options));
  }
  {  // self attention
    ParameterStore store;
    MultiHeadSelfAttention layer(store, "self_attention", d, shape.heads);
    layer.init(rng);
    MatrixXd x = random_matrix(n_tok, d, rng), r = random_matrix(n_tok, d, rng);
    AttentionCache c;
    layer.forward(x, c);
    std::vector<InputSlot> in{{"x", &x, layer.backward(c, r)}};
    reports.push_back(verify("self_attention", store, in,
                             [&] { AttentionCache t; return project(layer.forward(x, t), r); }, options));
  }
  {  // feed-forward
    ParameterStore store;
    FeedForward layer(store, "feed_forward", d, 4 * d);
    layer.init(rng);
    MatrixXd x = random_matrix(n_tok, d, rng), r = random_matrix(n_tok, d, rng);
    FeedForwardCache c;
    layer.forward(x, c);
    std::vector<InputSlot> in{{"x", &x, layer.backward(c, r)}};
    reports.push_back(verify("feed_forward", store, in,
                             [&] { FeedForwardCache t; return project(layer.forward(x, t), r); }, options));
  }
  {  // encoder block
    ParameterStore store;
    EncoderBlock layer(store, "encoder_block", d, shape.heads);
    layer.init(rng);
    MatrixXd x = random_matrix(n_tok, d, rng), r = random_matrix(n_tok, d, rng);
    EncoderBlockCache c;
    layer.forward(x, c);
    std::vector<InputSlot> in{{"x", &x, layer.backward(c, r)}};
    reports.push_back(verify("encoder_block", store, in,
                             [&] { EncoderBlockCache t; return project(layer.forward(x, t), r); }, options));
  }
  {  // complex linear
    ParameterStore store;
    ComplexLinear layer(store, "complex_linear", d, 6);
    layer.init(rng);
    uniform_fill(layer.bias_real().value, -0.5, 0.5, rng);
    uniform_fill(layer.bias_imag().value, -0.5, 0.5, rng);
    const Index bins = half_spectrum_bins(shape.seq_len);
    MatrixXd xr = random_matrix(bins, d, rng), xi = random_matrix(bins, d, rng);
    MatrixXd rr = random_matrix(bins, 6, rng), ri = random_matrix(bins, 6, rng);
    auto loss = [&] {
      ComplexLinearCache t;
      const SpectrumXd y = layer.forward(SpectrumXd(xr, xi), t);
      return project(y.real, rr) + project(y.imag, ri);
    };
    ComplexLinearCache c;
    layer.forward(SpectrumXd(xr, xi), c);
    const SpectrumXd g = layer.backward(c, SpectrumXd(rr, ri));
    std::vector<InputSlot> in{{"x.real", &xr, g.real}, {"x.imag", &xi, g.imag}};
    reports.push_back(verify("complex_linear", store, in, loss, options));
  }
  {  // RevIN normalize -> elementwise mix -> denormalize, exercising the statistics path
    ParameterStore store;
    RevIn layer(store, "revin", d);
    layer.init();
    uniform_fill(layer.gamma().value, 0.5, 1.5, rng);
    uniform_fill(layer.beta().value, -0.5, 0.5, rng);
    const Index valid = shape.seq_len - 3;
    MatrixXd x = padded_sequence(shape, valid, rng);
    const MatrixXd mix = random_matrix(shape.seq_len, d, rng), r = random_matrix(shape.seq_len, d, rng);
    auto run = [&](RevInCache& stats, RevInDenormCache& dc) {
      return layer.denormalize(layer.normalize(x, valid, stats).cwiseProduct(mix), stats, dc);
    };
    RevInCache stats;
    RevInDenormCache dc;
    run(stats, dc);
    VectorXd gm, gs;
    const MatrixXd gz = layer.denormalize_backward(stats, dc, r, gm, gs);
    std::vector<InputSlot> in{{"x", &x, layer.normalize_backward(stats, gz.cwiseProduct(mix), gm, gs)}};
    reports.push_back(verify("revin", store, in,
                             [&] { RevInCache s; RevInDenormCache t; return project(run(s, t), r); }, options));
  }
  {  // coarse target attention
    ParameterStore store;
    const Index valid = shape.seq_len - 4;
    MatrixXd x = padded_sequence(shape, valid, rng), t = random_matrix(d, 1, rng);
    const MatrixXd r = random_matrix(shape.seq_len, d, rng);
    const double alpha = std::sqrt(static_cast<double>(d));
    CoarseAttentionCache c;
    coarse_target_attention(x, t.col(0), alpha, valid, c);
    const SequenceTargetGrad g = coarse_target_attention_backward(c, r);
    std::vector<InputSlot> in{{"x", &x, g.sequence}, {"target", &t, g.target}};
    reports.push_back(verify("coarse_target_attention", store, in, [&] {
      CoarseAttentionCache tc;
      return project(coarse_target_attention(x, t.col(0), alpha, valid, tc), r);
    }, options));
  }
  for (Index patch : {shape.patch, shape.patch + 1}) {  // patchify, divisible and zero-padded tails
    ParameterStore store;
    Patchify layer(store, "patchify", shape.seq_len, patch, d, true);
    layer.init(rng);
    MatrixXd x = random_matrix(shape.seq_len, d, rng);
    const MatrixXd r = random_matrix(layer.num_patches(), d, rng);
    PatchifyCache c;
    layer.forward(x, c);
    std::vector<InputSlot> in{{"x", &x, layer.backward(c, r)}};
    reports.push_back(verify("patchify[P=" + std::to_string(patch) + "]", store, in,
                             [&] { PatchifyCache t; return project(layer.forward(x, t), r); }, options));
  }
  for (Index patch : {shape.patch, shape.patch + 1}) {  // depatchify
    ParameterStore store;
    Depatchify layer(store, "depatchify", shape.seq_len, patch, d);
    layer.init(rng);
    const Index tokens = (shape.seq_len + patch - 1) / patch;
    MatrixXd e = random_matrix(tokens, d, rng);
    const MatrixXd r = random_matrix(shape.seq_len, d, rng);
    DepatchifyCache c;
    layer.forward(e, c);
    std::vector<InputSlot> in{{"tokens", &e, layer.backward(c, r)}};
    reports.push_back(verify("depatchify[P=" + std::to_string(patch) + "]", store, in,
                             [&] { DepatchifyCache t; return project(layer.forward(e, t), r); }, options));
  }
  {  // time branch: coarse attention -> patchify -> encoder -> depatchify
    ParameterStore store;
    const FedinConfig cfg = shape_config(shape);
    TimeBranch layer(store, "time", cfg);
    layer.init(rng);
    const Index valid = shape.seq_len - 2;
    MatrixXd x = padded_sequence(shape, valid, rng), t = random_matrix(d, 1, rng);
    const MatrixXd r = random_matrix(shape.seq_len, d, rng);
    TimeBranchCache c;
    layer.forward(x, t.col(0), valid, c);
    const SequenceTargetGrad g = layer.backward(c, r);
    std::vector<InputSlot> in{{"x", &x, g.sequence}, {"target", &t, g.target}};
    reports.push_back(verify("time_branch", store, in, [&] {
      TimeBranchCache tc;
      return project(layer.forward(x, t.col(0), valid, tc), r);
    }, options));
  }
  {  // target scores
    ParameterStore store;
    MatrixXd x = random_matrix(shape.seq_len, d, rng), t = random_matrix(d, 1, rng);
    const VectorXd r = random_matrix(shape.seq_len, 1, rng).col(0);
    const double alpha = std::sqrt(static_cast<double>(d));
    const SequenceTargetGrad g = target_scores_backward(x, t.col(0), alpha, r);
    std::vector<InputSlot> in{{"x", &x, g.sequence}, {"target", &t, g.target}};
    reports.push_back(
        verify("target_scores", store, in, [&] { return target_scores(x, t.col(0), alpha).dot(r); }, options));
  }
  for (Index len : {shape.seq_len, shape.seq_len - 1}) {  // rfft / irfft on radix-2 and direct paths
    ParameterStore store;
    const Index bins = half_spectrum_bins(len);
    MatrixXd x = random_matrix(len, d, rng);
    const MatrixXd rr = random_matrix(bins, d, rng), ri = random_matrix(bins, d, rng);
    std::vector<InputSlot> in{{"x", &x, rfft_backward(SpectrumXd(rr, ri), len)}};
    reports.push_back(verify("rfft[L=" + std::to_string(len) + "]", store, in, [&] {
      const SpectrumXd s = rfft(x);
      return project(s.real, rr) + project(s.imag, ri);
    }, options));

    MatrixXd sr = random_matrix(bins, d, rng), si = random_matrix(bins, d, rng);
    const MatrixXd r = random_matrix(len, d, rng);
    const SpectrumXd g = irfft_backward(r);
    std::vector<InputSlot> in2{{"spectrum.real", &sr, g.real}, {"spectrum.imag", &si, g.imag}};
    reports.push_back(verify("irfft[L=" + std::to_string(len) + "]", store, in2,
                             [&] { return project(irfft(SpectrumXd(sr, si), len), r); }, options));
  }
  {  // complex MLP filter
    ParameterStore store;
    ComplexMlpFilter layer(store, "cmlp", d, d);
    layer.init(rng);
    uniform_fill(layer.layer1().bias_real().value, -0.3, 0.3, rng);
    uniform_fill(layer.layer1().bias_imag().value, -0.3, 0.3, rng);
    const Index bins = half_spectrum_bins(shape.seq_len);
    MatrixXd xr = random_matrix(bins, d, rng), xi = random_matrix(bins, d, rng);
    const MatrixXd r = random_matrix(shape.seq_len, d, rng);
    ComplexMlpCache c;
    layer.forward(SpectrumXd(xr, xi), shape.seq_len, c);
    const SpectrumXd g = layer.backward(c, r);
    std::vector<InputSlot> in{{"spectrum.real", &xr, g.real}, {"spectrum.imag", &xi, g.imag}};
    reports.push_back(verify("complex_mlp_filter", store, in, [&] {
      ComplexMlpCache t;
      return project(layer.forward(SpectrumXd(xr, xi), shape.seq_len, t), r);
    }, options));
  }
  {  // resonance gate
    ParameterStore store;
    const Index bins = half_spectrum_bins(shape.seq_len);
    ResonanceGate layer(store, "gate", bins, 16);
    layer.init(rng);
    MatrixXd amp = random_matrix(bins, 1, rng).cwiseAbs(), filtered = random_matrix(shape.seq_len, d, rng);
    const MatrixXd r = random_matrix(shape.seq_len, d, rng);
    GateCache c;
    layer.forward(amp.col(0), filtered, c);
    VectorXd g_amp;
    MatrixXd g_f = layer.backward(c, r, g_amp);
    std::vector<InputSlot> in{{"amplitude", &amp, MatrixXd(g_amp)}, {"filtered", &filtered, g_f}};
    reports.push_back(verify("resonance_gate", store, in,
                             [&] { GateCache t; return project(layer.forward(amp.col(0), filtered, t), r); }, options));
  }
  for (Ablation mode : {Ablation::Full, Ablation::NoFreqTa, Ablation::NoFreqScaling}) {  // frequency branch
    ParameterStore store;
    FedinConfig cfg = shape_config(shape);
    cfg.ablation = mode;
    FreqBranch layer(store, "freq", cfg);
    layer.init(rng);
    uniform_fill(layer.static_filter().value, 0.2, 1.0, rng);
    MatrixXd x = random_matrix(shape.seq_len, d, rng), t = random_matrix(d, 1, rng, 2.0);
    const MatrixXd r = random_matrix(shape.seq_len, d, rng);
    FreqBranchCache c;
    layer.forward(x, t.col(0), c);
    const SequenceTargetGrad g = layer.backward(c, r);
    std::vector<InputSlot> in{{"x", &x, g.sequence}, {"target", &t, g.target}};
    reports.push_back(verify(std::string("freq_branch[") + to_string(mode) + "]", store, in, [&] {
      FreqBranchCache tc;
      return project(layer.forward(x, t.col(0), tc), r);
    }, options));
  }
  {  // top-k target attention
    ParameterStore store;
    const Index valid = shape.seq_len - 3;
    MatrixXd x = padded_sequence(shape, valid, rng), t = random_matrix(d, 1, rng, 2.0);
    const VectorXd r = random_matrix(d, 1, rng).col(0);
    const double alpha = std::sqrt(static_cast<double>(d));
    TopKCache c;
    topk_target_attention(x, t.col(0), alpha, shape.top_k, valid, true, c);
    const SequenceTargetGrad g = topk_target_attention_backward(c, r);
    std::vector<InputSlot> in{{"x", &x, g.sequence}, {"target", &t, g.target}};
    reports.push_back(verify("topk_target_attention", store, in, [&] {
      TopKCache tc;
      return topk_target_attention(x, t.col(0), alpha, shape.top_k, valid, true, tc).dot(r);
    }, options));
  }
  {  // prediction head
    ParameterStore store;
    PredictionHead layer(store, "head", d, {16, 8});
    layer.init(rng);
    MatrixXd u = random_matrix(d, 1, rng), t = random_matrix(d, 1, rng);
    HeadCache c;
    layer.forward(u.col(0), t.col(0), c);
    const auto [gu, gt] = layer.backward(c, 1.0);
    std::vector<InputSlot> in{{"interest", &u, MatrixXd(gu)}, {"target", &t, MatrixXd(gt)}};
    reports.push_back(verify("prediction_head", store, in, [&] {
      HeadCache tc;
      return layer.forward(u.col(0), t.col(0), tc);
    }, options));
  }
  return reports;
}

LayerCheckReport run_model_gradcheck(CtrModel& model, std::span<const SequenceSample> batch,
                                     const GradCheckOptions& options) {
  std::vector<double> labels;
  for (const auto& s : batch) labels.push_back(s.label);
  auto loss = [&] {
    long double total = 0;
    for (const auto& s : batch) {
      const long double z = model.forward(s, nullptr);
      total += std::max(z, 0.0L) - static_cast<long double>(s.label) * z + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<long double>(batch.size());
  };

  ParameterStore& store = model.params();
  store.zero_grad();
  std::vector<double> logits;
  std::vector<std::unique_ptr<ForwardTrace>> traces;
  for (const auto& s : batch) {
    traces.push_back(model.new_trace());
    logits.push_back(model.forward(s, traces.back().get()));
  }
  const BceResult bce = bce_with_logits(logits, labels);
  for (size_t i = 0; i < batch.size(); ++i) model.backward(*traces[i], bce.grad_logits[i]);

  std::vector<GradCheckTarget> targets = targets_from_store(store);
  for (auto& target : targets) {
    if (target.name != "embed.item") continue;
    std::set<int> rows;
    for (const auto& s : batch) {
      for (Index i = 0; i < s.valid_len; ++i) rows.insert(s.item_ids[static_cast<size_t>(i)]);
      rows.insert(s.target_id);
    }
    const Index dim = model.config().embed_dim;
    for (int row : rows) {
      for (Index c = 0; c < dim; ++c) target.coords.push_back(row * dim + c);
    }
  }
  return {model.kind(), finite_difference_check(loss, targets, options)};
}

FedinConfig gradcheck_model_config(Ablation ablation) {
  FedinConfig cfg;
  cfg.embed_dim = 8;
  cfg.max_seq_len = 16;
  cfg.patch_size = 4;
  cfg.top_k = 3;
  cfg.num_heads = 2;
  cfg.num_items = 40;
  cfg.num_users = 4;
  cfg.ablation = ablation;
  return cfg;
}

std::vector<SequenceSample> gradcheck_batch(const FedinConfig& cfg, std::uint64_t seed, Index batch) {
  Rng rng(seed);
  std::uniform_int_distribution<int> item(1, static_cast<int>(cfg.num_items - 1));
  std::vector<SequenceSample> out;
  for (Index b = 0; b < batch; ++b) {
    SequenceSample s;
    s.valid_len = b % 2 == 0 ? cfg.max_seq_len : std::max<Index>(1, cfg.max_seq_len - 5);
    s.item_ids.assign(static_cast<size_t>(cfg.max_seq_len), kPaddingItem);
    for (Index i = 0; i < s.valid_len; ++i) s.item_ids[static_cast<size_t>(i)] = item(rng);
    s.target_id = item(rng);
    s.label = b % 2 == 0 ? 1.0 : 0.0;
    s.user_id = static_cast<int>(b);
    s.timestamp = b;
    out.push_back(std::move(s));
  }
  return out;
}

void spread_item_embeddings(CtrModel& model, double range, std::uint64_t seed) {
  Rng rng(seed);
  Parameter& items = model.params().at("embed.item");
  uniform_fill(items.value, -range, range, rng);
  items.value.row(kPaddingItem).setZero();
}

void perturb_to_generic_point(CtrModel& model, double embed_range, std::uint64_t seed) {
  spread_item_embeddings(model, embed_range, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> shift(-0.2, 0.2);
  for (auto& param : model.params()) {
    Parameter& p = *param;
    const std::string& n = p.name;
    auto ends_with = [&](const std::string& suffix) {
      return n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".b") || ends_with(".beta") || ends_with(".bias_real") || ends_with(".bias_imag")) {
      for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = shift(rng);
    } else if (ends_with(".gamma") || ends_with(".static_filter")) {
      for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] *= 1.0 + shift(rng);
    }
  }
}

}  // namespace fedin
