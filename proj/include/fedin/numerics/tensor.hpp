#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <string>

#include "fedin/numerics/errors.hpp"

namespace fedin {

using Index = Eigen::Index;

// Row-major storage throughout: sequences are [positions x channels] and a
// contiguous block of P rows reshapes to a single flattened patch for free.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Complex array kept as two real planes of identical shape.
///
/// Keeping real and imaginary parts apart makes every complex layer a pair of
/// real linear maps, which is what the backward passes are written against.
template <typename Scalar>
struct Spectrum {
  Matrix<Scalar> real;
  Matrix<Scalar> imag;

  Spectrum() = default;
  Spectrum(Index rows, Index cols) : real(Matrix<Scalar>::Zero(rows, cols)), imag(Matrix<Scalar>::Zero(rows, cols)) {}
  Spectrum(Matrix<Scalar> re, Matrix<Scalar> im) : real(std::move(re)), imag(std::move(im)) {
    if (real.rows() != imag.rows() || real.cols() != imag.cols()) {
      throw DimensionError("Spectrum: real/imag planes differ in shape");
    }
  }

  Index rows() const { return real.rows(); }
  Index cols() const { return real.cols(); }
};

using SpectrumXd = Spectrum<double>;

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

template <typename A, typename B>
void require_same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(where) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

}  // namespace fedin
