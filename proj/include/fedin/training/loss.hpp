#pragma once

#include <span>
#include <vector>

namespace fedin {

struct BceResult {
  double loss = 0;
  std::vector<double> grad_logits;  // d loss / d logit_i = (p_i - y_i) / B
};

/// Mean binary cross-entropy evaluated from logits in the overflow-free form
/// max(z, 0) - y z + log(1 + exp(-|z|)).
BceResult bce_with_logits(std::span<const double> logits, std::span<const double> labels);

/// Same objective from probabilities; only meant for direct-formula checks.
double bce_from_probabilities(std::span<const double> probabilities, std::span<const double> labels);

}  // namespace fedin
