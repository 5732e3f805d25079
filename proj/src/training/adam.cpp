#include "fedin/training/adam.hpp"

#include <cmath>

namespace fedin {

void adam_step(ParameterStore& store, long step, const AdamConfig& cfg) {
  if (step <= 0) throw UsageError("adam_step: step index must be >= 1, got " + std::to_string(step));
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (auto& p : store) {
    double* value = p->value.data();
    double* grad = p->grad.data();
    double* m = p->adam_m.data();
    double* v = p->adam_v.data();
    for (Index i = 0; i < p->size(); ++i) {
      const double g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      grad[i] = 0.0;
    }
  }
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0 && norm > max_norm) store.scale_grads(max_norm / norm);
  return norm;
}

}  // namespace fedin
