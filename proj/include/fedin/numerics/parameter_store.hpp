#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedin/numerics/tensor.hpp"

namespace fedin {

/// One trainable tensor with its gradient accumulator and Adam moments.
/// Vectors are stored as [n x 1] matrices with rank 1 recorded in `shape`.
struct Parameter {
  std::string name;
  std::vector<Index> shape;
  MatrixXd value;
  MatrixXd grad;
  MatrixXd adam_m;
  MatrixXd adam_v;

  Index size() const { return value.size(); }
  auto vec() { return value.reshaped<Eigen::RowMajor>(); }
  auto grad_vec() { return grad.reshaped<Eigen::RowMajor>(); }
};

/// Named, insertion-ordered parameter collection. Addresses of registered
/// parameters are stable for the lifetime of the store, so layers hold raw
/// `Parameter*` handles into it.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter& add(const std::string& name, Index rows, Index cols);
  Parameter& add_vector(const std::string& name, Index size);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  size_t size() const { return params_.size(); }
  Parameter& operator[](size_t i) { return *params_[i]; }
  const Parameter& operator[](size_t i) const { return *params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  void zero_grad();
  Index total_size() const;
  double grad_norm() const;
  void scale_grads(double factor);

  /// Copies values only (not moments) from another store with identical layout.
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace fedin
