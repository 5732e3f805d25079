#pragma once

#include <string>
#include <vector>

#include "fedin/numerics/tensor.hpp"

namespace fedin {

enum class Ablation { Full, NoTimeBranch, NoFreqBranch, NoFreqTa, NoFreqScaling };

const char* to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);
const std::vector<Ablation>& all_ablations();

/// Reserved id for padded sequence positions.
inline constexpr int kPaddingItem = 0;

struct FedinConfig {
  Index embed_dim = 32;
  Index max_seq_len = 100;
  Index patch_size = 10;
  Index top_k = 20;
  double alpha = 0.0;  // <= 0 selects sqrt(embed_dim)
  Index num_heads = 2;
  Index transformer_layers = 1;
  Index cmlp_hidden = 0;  // <= 0 selects embed_dim
  Index gate_hidden = 16;
  std::vector<Index> head_hidden{64, 32};
  Ablation ablation = Ablation::Full;
  Index num_items = 0;  // item table rows, including the padding row 0
  Index num_users = 0;
  bool use_topk = true;  // false: plain masked target attention in the aggregator
  bool patch_positional = true;

  double resolved_alpha() const;
  Index resolved_cmlp_hidden() const;
  Index num_patches() const { return (max_seq_len + patch_size - 1) / patch_size; }
  Index spectrum_bins() const { return max_seq_len / 2 + 1; }

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

}  // namespace fedin
