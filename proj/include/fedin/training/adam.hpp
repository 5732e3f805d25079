#pragma once

#include "fedin/numerics/parameter_store.hpp"

namespace fedin {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of every parameter in store order, then zeroes
/// the gradients. `step` counts from 1.
void adam_step(ParameterStore& store, long step, const AdamConfig& cfg);

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

}  // namespace fedin
