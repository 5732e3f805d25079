#include "fedin/numerics/parameter_store.hpp"

#include <cmath>

namespace fedin {

ParameterStore::ParameterStore(const ParameterStore& other) { *this = other; }

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this == &other) return *this;
  params_.clear();
  index_ = other.index_;
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
  return *this;
}

Parameter& ParameterStore::add(const std::string& name, Index rows, Index cols) {
  if (index_.count(name)) throw UsageError("ParameterStore: duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->shape = {rows, cols};
  p->value = MatrixXd::Zero(rows, cols);
  p->grad = MatrixXd::Zero(rows, cols);
  p->adam_m = MatrixXd::Zero(rows, cols);
  p->adam_v = MatrixXd::Zero(rows, cols);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::add_vector(const std::string& name, Index size) {
  Parameter& p = add(name, size, 1);
  p.shape = {size};
  return p;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("ParameterStore: unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("ParameterStore: unknown parameter '" + name + "'");
  return *params_[it->second];
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

Index ParameterStore::total_size() const {
  Index n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

double ParameterStore::grad_norm() const {
  double sq = 0;
  for (const auto& p : params_) {
    const double* g = p->grad.data();
    for (Index i = 0; i < p->grad.size(); ++i) sq += g[i] * g[i];
  }
  return std::sqrt(sq);
}

void ParameterStore::scale_grads(double factor) {
  for (auto& p : params_) p->grad *= factor;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.size() != size()) throw UsageError("ParameterStore: layout mismatch in copy_values_from");
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_[i]->name != other[i].name) {
      throw UsageError("ParameterStore: layout mismatch at '" + params_[i]->name + "'");
    }
    require_same_shape(params_[i]->value, other[i].value, "ParameterStore::copy_values_from");
    params_[i]->value = other[i].value;
  }
}

}  // namespace fedin
