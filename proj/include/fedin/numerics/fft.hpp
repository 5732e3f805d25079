#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "fedin/numerics/tensor.hpp"

namespace fedin {

/// Length of the non-redundant half spectrum of a real length-n signal.
inline Index half_spectrum_bins(Index n) { return n / 2 + 1; }

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// Twiddle table e^{-2 pi i m / n}, m in [0, n). Quarter-turn entries are
// stored exactly so impulse and Nyquist inputs transform without roundoff.
template <typename Scalar>
struct TwiddleTable {
  std::vector<Scalar> cos_;
  std::vector<Scalar> sin_;

  explicit TwiddleTable(Index n) : cos_(static_cast<size_t>(n)), sin_(static_cast<size_t>(n)) {
    for (Index m = 0; m < n; ++m) {
      const Scalar theta = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(m) / Scalar(n);
      Scalar c = std::cos(theta), s = std::sin(theta);
      if (4 * m % n == 0) {
        switch (4 * m / n) {
          case 0: c = 1; s = 0; break;
          case 1: c = 0; s = 1; break;
          case 2: c = -1; s = 0; break;
          default: c = 0; s = -1; break;
        }
      }
      cos_[static_cast<size_t>(m)] = c;
      sin_[static_cast<size_t>(m)] = s;
    }
  }
};

template <typename Scalar>
const TwiddleTable<Scalar>& twiddles(Index n) {
  static std::mutex mu;
  static std::unordered_map<Index, std::unique_ptr<TwiddleTable<Scalar>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<TwiddleTable<Scalar>>(n);
  return *slot;
}

// In-place iterative radix-2 transform of (re, im), forward sign convention.
template <typename Scalar>
void radix2_inplace(Scalar* re, Scalar* im, Index n) {
  for (Index i = 1, j = 0; i < n; ++i) {
    Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  const auto& tw = twiddles<Scalar>(n);
  for (Index len = 2; len <= n; len <<= 1) {
    const Index half = len / 2, step = n / len;
    for (Index start = 0; start < n; start += len) {
      for (Index j = 0; j < half; ++j) {
        const Scalar wr = tw.cos_[static_cast<size_t>(j * step)];
        const Scalar wi = -tw.sin_[static_cast<size_t>(j * step)];
        const Index a = start + j, b = a + half;
        const Scalar tr = re[b] * wr - im[b] * wi;
        const Scalar ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
}

// Direct O(n^2) forward DFT of bins [0, bins). Used whenever n is not a power of two.
template <typename Scalar>
void direct_dft(const Scalar* re, const Scalar* im, Index n, Index bins, Scalar* out_re, Scalar* out_im) {
  const auto& tw = twiddles<Scalar>(n);
  for (Index k = 0; k < bins; ++k) {
    Scalar acc_re = 0, acc_im = 0;
    Index m = 0;
    for (Index t = 0; t < n; ++t) {
      const Scalar c = tw.cos_[static_cast<size_t>(m)], s = tw.sin_[static_cast<size_t>(m)];
      acc_re += re[t] * c + im[t] * s;
      acc_im += im[t] * c - re[t] * s;
      m += k;
      if (m >= n) m -= n;
    }
    out_re[k] = acc_re;
    out_im[k] = acc_im;
  }
}

template <typename Scalar>
void forward_transform(std::vector<Scalar>& re, std::vector<Scalar>& im) {
  const auto n = static_cast<Index>(re.size());
  if (is_power_of_two(n)) {
    radix2_inplace(re.data(), im.data(), n);
  } else {
    std::vector<Scalar> out_re(re.size()), out_im(im.size());
    direct_dft(re.data(), im.data(), n, n, out_re.data(), out_im.data());
    re.swap(out_re);
    im.swap(out_im);
  }
}

}  // namespace detail

/// Unnormalized forward DFT of a complex column vector: X_k = sum_n x_n e^{-2 pi i k n / L}.
/// Radix-2 when L is a power of two, direct summation otherwise.
template <typename Scalar>
Spectrum<Scalar> fft(const Spectrum<Scalar>& x) {
  if (x.cols() != 1 || x.rows() < 1) throw DimensionError("fft: expects a non-empty column, got " + shape_string(x.real));
  std::vector<Scalar> re(x.real.data(), x.real.data() + x.rows());
  std::vector<Scalar> im(x.imag.data(), x.imag.data() + x.rows());
  detail::forward_transform(re, im);
  Spectrum<Scalar> out(x.rows(), 1);
  for (Index k = 0; k < x.rows(); ++k) {
    out.real(k, 0) = re[static_cast<size_t>(k)];
    out.imag(k, 0) = im[static_cast<size_t>(k)];
  }
  return out;
}

/// Inverse DFT with 1/L scaling, so ifft(fft(x)) == x.
template <typename Scalar>
Spectrum<Scalar> ifft(const Spectrum<Scalar>& x) {
  Spectrum<Scalar> conj(x.real, -x.imag);
  Spectrum<Scalar> y = fft(conj);
  const Scalar inv = Scalar(1) / Scalar(x.rows());
  y.real *= inv;
  y.imag *= -inv;
  return y;
}

/// Column-wise half-spectrum of a real [L x D] signal: [(L/2 + 1) x D].
/// Bin-for-bin identical to fft of the zero-imaginary column.
template <typename Derived>
Spectrum<typename Derived::Scalar> rfft(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows(), cols = x.cols();
  if (n < 2) throw DimensionError("rfft: sequence length must be >= 2, got " + shape_string(x));
  const Index bins = half_spectrum_bins(n);
  Spectrum<Scalar> out(bins, cols);
  if (!is_power_of_two(n)) {
    // All columns at once; per element the sum runs over t in the same order
    // as direct_dft, with the zero imaginary terms contributing exactly 0.
    const Matrix<Scalar> xm = x;
    const auto& tw = detail::twiddles<Scalar>(n);
    out.real.setZero();
    out.imag.setZero();
    for (Index k = 0; k < bins; ++k) {
      Scalar* acc_re = out.real.row(k).data();
      Scalar* acc_im = out.imag.row(k).data();
      Index m = 0;
      for (Index t = 0; t < n; ++t) {
        const Scalar c = tw.cos_[static_cast<size_t>(m)], s = tw.sin_[static_cast<size_t>(m)];
        const Scalar* row = xm.row(t).data();
        for (Index d = 0; d < cols; ++d) {
          acc_re[d] += row[d] * c;
          acc_im[d] -= row[d] * s;
        }
        m += k;
        if (m >= n) m -= n;
      }
    }
    return out;
  }
  std::vector<Scalar> re(static_cast<size_t>(n)), im(static_cast<size_t>(n));
  for (Index d = 0; d < cols; ++d) {
    for (Index t = 0; t < n; ++t) re[static_cast<size_t>(t)] = x(t, d);
    std::fill(im.begin(), im.end(), Scalar(0));
    detail::radix2_inplace(re.data(), im.data(), n);
    for (Index k = 0; k < bins; ++k) {
      out.real(k, d) = re[static_cast<size_t>(k)];
      out.imag(k, d) = im[static_cast<size_t>(k)];
    }
  }
  return out;
}

/// Multiplicity of each half-spectrum bin in the full conjugate-symmetric
/// spectrum: 1 for DC (and Nyquist when L is even), 2 for interior bins.
template <typename Scalar>
Vector<Scalar> bin_multiplicity(Index n) {
  const Index bins = half_spectrum_bins(n);
  Vector<Scalar> c = Vector<Scalar>::Constant(bins, Scalar(2));
  c(0) = 1;
  if (n % 2 == 0) c(bins - 1) = 1;
  return c;
}

/// Inverse of rfft for length-L real output. The imaginary parts of the DC bin
/// and (even L) the Nyquist bin are projected to zero before inversion.
template <typename Scalar>
Matrix<Scalar> irfft(const Spectrum<Scalar>& spec, Index n) {
  const Index bins = half_spectrum_bins(n);
  if (n < 2 || spec.rows() != bins) {
    throw DimensionError("irfft: expected " + std::to_string(bins) + " bins for length " + std::to_string(n) +
                         ", got " + shape_string(spec.real));
  }
  const bool even = n % 2 == 0;
  const Index cols = spec.cols();
  Matrix<Scalar> out(n, cols);
  const Scalar inv = Scalar(1) / Scalar(n);
  if (!is_power_of_two(n)) {
    // x_t = (1/L) sum_k c_k (Re S_k cos(2 pi k t / L) - Im S_k sin(2 pi k t / L)),
    // with the DC and Nyquist imaginary parts dropped.
    const auto& tw = detail::twiddles<Scalar>(n);
    out.setZero();
    for (Index t = 0; t < n; ++t) {
      Scalar* acc = out.row(t).data();
      Index m = 0;
      for (Index k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (even && k == bins - 1);
        const Scalar c = tw.cos_[static_cast<size_t>(m)] * (edge ? Scalar(1) : Scalar(2));
        const Scalar s = edge ? Scalar(0) : Scalar(2) * tw.sin_[static_cast<size_t>(m)];
        const Scalar* re = spec.real.row(k).data();
        const Scalar* im = spec.imag.row(k).data();
        for (Index d = 0; d < cols; ++d) acc[d] += re[d] * c - im[d] * s;
        m += t;
        if (m >= n) m -= n;
      }
    }
    out *= inv;
    return out;
  }
  std::vector<Scalar> re(static_cast<size_t>(n)), im(static_cast<size_t>(n));
  for (Index d = 0; d < cols; ++d) {
    // Conjugate of the full spectrum, so a forward transform yields conj(inverse).
    re[0] = spec.real(0, d);
    im[0] = 0;
    for (Index k = 1; k < bins; ++k) {
      const bool nyquist = even && k == bins - 1;
      re[static_cast<size_t>(k)] = spec.real(k, d);
      im[static_cast<size_t>(k)] = nyquist ? Scalar(0) : -spec.imag(k, d);
      if (!nyquist) {
        re[static_cast<size_t>(n - k)] = spec.real(k, d);
        im[static_cast<size_t>(n - k)] = spec.imag(k, d);
      }
    }
    detail::radix2_inplace(re.data(), im.data(), n);
    for (Index t = 0; t < n; ++t) out(t, d) = re[static_cast<size_t>(t)] * inv;
  }
  return out;
}

/// Adjoint of rfft as a real-linear map R^{L x D} -> C^{bins x D}.
template <typename Scalar>
Matrix<Scalar> rfft_backward(const Spectrum<Scalar>& grad, Index n) {
  const Vector<Scalar> c = bin_multiplicity<Scalar>(n);
  Spectrum<Scalar> scaled = grad;
  for (Index k = 0; k < c.size(); ++k) {
    scaled.real.row(k) /= c(k);
    scaled.imag.row(k) /= c(k);
  }
  Matrix<Scalar> out = irfft(scaled, n);
  out *= Scalar(n);
  return out;
}

/// Adjoint of irfft (including the DC/Nyquist imaginary projection).
template <typename Derived>
Spectrum<typename Derived::Scalar> irfft_backward(const Eigen::MatrixBase<Derived>& grad) {
  using Scalar = typename Derived::Scalar;
  const Index n = grad.rows();
  Spectrum<Scalar> g = rfft(grad);
  const Vector<Scalar> c = bin_multiplicity<Scalar>(n);
  for (Index k = 0; k < c.size(); ++k) {
    g.real.row(k) *= c(k) / Scalar(n);
    g.imag.row(k) *= c(k) / Scalar(n);
  }
  g.imag.row(0).setZero();
  if (n % 2 == 0) g.imag.row(c.size() - 1).setZero();
  return g;
}

}  // namespace fedin
