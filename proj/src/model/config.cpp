#include "fedin/model/config.hpp"

#include <cmath>

namespace fedin {

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoTimeBranch: return "no_time_branch";
    case Ablation::NoFreqBranch: return "no_freq_branch";
    case Ablation::NoFreqTa: return "no_freq_ta";
    case Ablation::NoFreqScaling: return "no_freq_scaling";
  }
  return "unknown";
}

Ablation ablation_from_string(const std::string& s) {
  for (Ablation a : all_ablations()) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown ablation mode '" + s + "'");
}

const std::vector<Ablation>& all_ablations() {
  static const std::vector<Ablation> modes{Ablation::Full, Ablation::NoTimeBranch, Ablation::NoFreqBranch,
                                           Ablation::NoFreqTa, Ablation::NoFreqScaling};
  return modes;
}

double FedinConfig::resolved_alpha() const {
  return alpha > 0 ? alpha : std::sqrt(static_cast<double>(embed_dim));
}

Index FedinConfig::resolved_cmlp_hidden() const { return cmlp_hidden > 0 ? cmlp_hidden : embed_dim; }

void FedinConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (embed_dim < 1) fail("embed_dim must be positive");
  if (max_seq_len < 2) fail("max_seq_len must be >= 2");
  if (patch_size < 1 || patch_size > max_seq_len) fail("patch_size must lie in [1, max_seq_len]");
  if (top_k < 1 || top_k > max_seq_len) fail("top_k must lie in [1, max_seq_len]");
  if (num_heads < 1) fail("num_heads must be positive");
  if (embed_dim % num_heads != 0) fail("embed_dim must be divisible by num_heads");
  if (num_heads > 1 && embed_dim % 2 != 0) fail("embed_dim must be even with multiple heads");
  if (transformer_layers < 1) fail("transformer_layers must be positive");
  if (gate_hidden < 1) fail("gate_hidden must be positive");
  for (Index h : head_hidden) {
    if (h < 1) fail("head_hidden entries must be positive");
  }
  if (num_items < 2) fail("num_items must cover the padding row and at least one item");
  if (!std::isfinite(alpha)) fail("alpha must be finite");
}

}  // namespace fedin
