#pragma once

#include <cmath>
#include <limits>

#include "fedin/numerics/tensor.hpp"

namespace fedin {

enum class Axis { Rows = 0, Cols = 1 };

/// Matrix product with a fixed accumulation order: for every output row the
/// inner index runs 0..k-1 left to right. Results are reproducible bit-for-bit
/// regardless of build flags that would let a blocked GEMM reassociate.
template <typename DA, typename DB>
Matrix<typename DA::Scalar> matmul(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(a) + " x " + shape_string(b));
  }
  const Index m = a.rows(), k = a.cols(), n = b.cols();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index p = 0; p < k; ++p) {
      const Scalar aip = a(i, p);
      for (Index j = 0; j < n; ++j) out(i, j) += aip * b(p, j);
    }
  }
  return out;
}

namespace detail {

template <typename Slice>
void softmax_slice_inplace(Slice&& x) {
  using Scalar = typename std::decay_t<Slice>::Scalar;
  Scalar mx = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < x.size(); ++i) mx = std::max(mx, x(i));
  if (!std::isfinite(mx)) {
    throw NumericError("softmax: slice has no finite entry (all positions masked)");
  }
  Scalar total = 0;
  for (Index i = 0; i < x.size(); ++i) {
    x(i) = std::exp(x(i) - mx);  // exp(-inf) == 0 exactly
    total += x(i);
  }
  for (Index i = 0; i < x.size(); ++i) x(i) /= total;
}

}  // namespace detail

/// Numerically stable softmax of a vector; entries equal to -inf map to exactly 0.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x) {
  Vector<typename Derived::Scalar> out = x.reshaped();
  detail::softmax_slice_inplace(out);
  return out;
}

/// Softmax applied independently to each row (Axis::Cols) or column (Axis::Rows).
template <typename Derived>
Matrix<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x, Axis axis) {
  Matrix<typename Derived::Scalar> out = x;
  if (axis == Axis::Cols) {
    for (Index r = 0; r < out.rows(); ++r) detail::softmax_slice_inplace(out.row(r));
  } else {
    for (Index c = 0; c < out.cols(); ++c) detail::softmax_slice_inplace(out.col(c));
  }
  return out;
}

/// Vector-Jacobian product of softmax given its output y and upstream g.
template <typename DY, typename DG>
Vector<typename DY::Scalar> softmax_backward(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DG>& g) {
  using Scalar = typename DY::Scalar;
  Scalar dot = 0;
  for (Index i = 0; i < y.size(); ++i) dot += y(i) * g(i);
  Vector<Scalar> out(y.size());
  for (Index i = 0; i < y.size(); ++i) out(i) = y(i) * (g(i) - dot);
  return out;
}

/// Row-wise softmax backward for a matrix of independent slices.
template <typename Scalar>
Matrix<Scalar> softmax_rows_backward(const Matrix<Scalar>& y, const Matrix<Scalar>& g) {
  require_same_shape(y, g, "softmax_rows_backward");
  Matrix<Scalar> out(y.rows(), y.cols());
  for (Index r = 0; r < y.rows(); ++r) {
    const Scalar dot = y.row(r).dot(g.row(r));
    out.row(r) = y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
  }
  return out;
}

/// Element-wise complex product of equal-shape spectra.
template <typename Scalar>
Spectrum<Scalar> complex_elementwise(const Spectrum<Scalar>& a, const Spectrum<Scalar>& b) {
  require_same_shape(a.real, b.real, "complex_elementwise");
  Spectrum<Scalar> out;
  out.real = (a.real.array() * b.real.array() - a.imag.array() * b.imag.array()).matrix();
  out.imag = (a.real.array() * b.imag.array() + a.imag.array() * b.real.array()).matrix();
  return out;
}

/// Broadcast a per-row complex weight across all columns: out(k, d) = w_k * a(k, d).
template <typename Scalar>
Spectrum<Scalar> complex_elementwise(const Spectrum<Scalar>& a, const Spectrum<Scalar>& row_weights, bool broadcast) {
  if (!broadcast) return complex_elementwise(a, row_weights);
  if (row_weights.cols() != 1 || row_weights.rows() != a.rows()) {
    throw DimensionError("complex_elementwise: broadcast weights " + shape_string(row_weights.real) +
                         " do not match rows of " + shape_string(a.real));
  }
  Spectrum<Scalar> out(a.rows(), a.cols());
  for (Index k = 0; k < a.rows(); ++k) {
    const Scalar wr = row_weights.real(k, 0), wi = row_weights.imag(k, 0);
    for (Index d = 0; d < a.cols(); ++d) {
      out.real(k, d) = wr * a.real(k, d) - wi * a.imag(k, d);
      out.imag(k, d) = wr * a.imag(k, d) + wi * a.real(k, d);
    }
  }
  return out;
}

/// Real per-row weights broadcast along columns (zero imaginary part).
template <typename Scalar, typename Derived>
Spectrum<Scalar> scale_rows(const Spectrum<Scalar>& a, const Eigen::MatrixBase<Derived>& w) {
  if (w.size() != a.rows()) {
    throw DimensionError("scale_rows: " + std::to_string(w.size()) + " weights for " + shape_string(a.real));
  }
  Spectrum<Scalar> out = a;
  for (Index k = 0; k < a.rows(); ++k) {
    out.real.row(k) *= w(k);
    out.imag.row(k) *= w(k);
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> amplitude(const Spectrum<Scalar>& x) {
  return (x.real.array().square() + x.imag.array().square()).sqrt().matrix();
}

/// Backward of amplitude. The derivative at the origin is taken as zero.
template <typename Scalar>
Spectrum<Scalar> amplitude_backward(const Spectrum<Scalar>& x, const Matrix<Scalar>& amp, const Matrix<Scalar>& g) {
  require_same_shape(amp, g, "amplitude_backward");
  Spectrum<Scalar> out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (amp(i, j) > 0) {
        out.real(i, j) = g(i, j) * x.real(i, j) / amp(i, j);
        out.imag(i, j) = g(i, j) * x.imag(i, j) / amp(i, j);
      }
    }
  }
  return out;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace fedin
