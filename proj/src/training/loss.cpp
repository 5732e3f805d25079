#include "fedin/training/loss.hpp"

#include <cmath>

#include "fedin/numerics/errors.hpp"
#include "fedin/numerics/ops.hpp"

namespace fedin {

BceResult bce_with_logits(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw DimensionError("bce_with_logits: " + std::to_string(logits.size()) + " logits vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const auto b = static_cast<double>(logits.size());
  BceResult r;
  r.grad_logits.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], y = labels[i];
    if (y != 0.0 && y != 1.0) throw DataError("bce_with_logits: label must be 0 or 1");
    r.loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    r.grad_logits[i] = (sigmoid(z) - y) / b;
  }
  r.loss /= b;
  return r;
}

double bce_from_probabilities(std::span<const double> probabilities, std::span<const double> labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw DimensionError("bce_from_probabilities: size mismatch");
  }
  double total = 0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i], y = labels[i];
    total += -(y * std::log(p) + (1 - y) * std::log(1 - p));
  }
  return total / static_cast<double>(probabilities.size());
}

}  // namespace fedin
